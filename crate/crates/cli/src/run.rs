//! Run directories: artifacts, their SHA-256 manifest and its verification.

use crate::CliError;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

pub const MANIFEST: &str = "manifest.json";
pub const CONFIG: &str = "config.json";

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn run_id(config_sha256: &str, inputs: &BTreeMap<String, String>) -> String {
    let mut key = config_sha256.to_string();
    for (name, hash) in inputs {
        key.push_str(&format!("\n{name}={hash}"));
    }
    sha256_hex(key.as_bytes())
}

fn dir_name(command: &str, run_id: &str) -> String {
    format!("{command}-{}", &run_id[..16.min(run_id.len())])
}

/// A named pass/fail outcome recorded with a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: &str, passed: bool, detail: impl Into<String>) -> Self {
        Self { name: name.into(), passed, detail: detail.into() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config_sha256: String,
    /// Names the run directory: a hash of the configuration and input hashes.
    pub run_id: String,
    /// Hashes of input files (for example a potential being analyzed).
    pub inputs: BTreeMap<String, String>,
    /// Hashes of every artifact except the manifest itself.
    pub files: BTreeMap<String, String>,
    pub checks: Vec<Check>,
}

/// A run directory being written.
#[derive(Debug)]
pub struct RunArtifact {
    pub dir: PathBuf,
    pub manifest: Manifest,
}

impl RunArtifact {
    /// Creates `<root>/<command>-<run id prefix>` and stores the configuration.
    pub fn create(root: &Path, command: &str, config: &[u8], inputs: &[(&str, &[u8])]) -> Result<Self, CliError> {
        let config_sha256 = sha256_hex(config);
        let inputs: BTreeMap<String, String> = inputs.iter().map(|(n, b)| (n.to_string(), sha256_hex(b))).collect();
        let run_id = run_id(&config_sha256, &inputs);
        let dir = root.join(dir_name(command, &run_id));
        std::fs::create_dir_all(&dir)?;
        let mut run = Self {
            dir,
            manifest: Manifest {
                tool: "brenier".into(),
                version: env!("CARGO_PKG_VERSION").into(),
                command: command.into(),
                config_sha256,
                run_id,
                inputs,
                files: BTreeMap::new(),
                checks: Vec::new(),
            },
        };
        run.write(CONFIG, config)?;
        Ok(run)
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        std::fs::write(self.dir.join(name), bytes)?;
        self.manifest.files.insert(name.into(), sha256_hex(bytes));
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| CliError::Other(e.to_string()))?;
        bytes.push(b'\n');
        self.write(name, &bytes)
    }

    pub fn check(&mut self, check: Check) {
        self.manifest.checks.push(check);
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn all_passed(&self) -> bool {
        self.manifest.checks.iter().all(|c| c.passed)
    }

    /// Writes the manifest; call last.
    pub fn finish(&self) -> Result<(), CliError> {
        let mut bytes = serde_json::to_vec_pretty(&self.manifest).map_err(|e| CliError::Other(e.to_string()))?;
        bytes.push(b'\n');
        std::fs::write(self.dir.join(MANIFEST), bytes)?;
        Ok(())
    }
}

/// Outcome of re-checking a run directory.
#[derive(Clone, Debug, Serialize)]
pub struct Verification {
    pub dir: PathBuf,
    pub checks: Vec<Check>,
}

impl Verification {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn summary(&self) -> String {
        let mut out = String::new();
        for c in &self.checks {
            let mark = if c.passed { "PASS" } else { "FAIL" };
            out.push_str(&format!("{mark} {}: {}\n", c.name, c.detail));
        }
        out
    }
}

/// Recomputes every hash in the manifest and collects the recorded checks.
pub fn verify_run(dir: &Path) -> Result<Verification, CliError> {
    let text = std::fs::read_to_string(dir.join(MANIFEST))
        .map_err(|e| CliError::Verification(format!("cannot read {}: {e}", dir.join(MANIFEST).display())))?;
    let manifest: Manifest =
        serde_json::from_str(&text).map_err(|e| CliError::Verification(format!("malformed manifest: {e}")))?;
    let mut checks = Vec::new();
    let config = std::fs::read(dir.join(CONFIG)).unwrap_or_default();
    let config_hash = sha256_hex(&config);
    checks.push(Check::new("config hash", config_hash == manifest.config_sha256, format!("sha256 {}", &config_hash[..16])));
    let name = dir.file_name().and_then(|n| n.to_str()).unwrap_or("");
    let id = run_id(&manifest.config_sha256, &manifest.inputs);
    checks.push(Check::new("run id", id == manifest.run_id, "derived from configuration and inputs"));
    let expected = dir_name(&manifest.command, &id);
    checks.push(Check::new("run directory name", name == expected, format!("expected {expected}")));
    for (file, hash) in &manifest.files {
        let check = match std::fs::read(dir.join(file)) {
            Ok(bytes) => {
                let actual = sha256_hex(&bytes);
                let ok = &actual == hash;
                Check::new(&format!("file {file}"), ok, if ok { "hash matches" } else { "manifest mismatch" })
            }
            Err(e) => Check::new(&format!("file {file}"), false, format!("missing: {e}")),
        };
        checks.push(check);
    }
    checks.extend(manifest.checks.iter().cloned());
    Ok(Verification { dir: dir.to_path_buf(), checks })
}
