use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn brenier(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_brenier")).args(args).output().expect("binary runs")
}

fn run_dir(out: &Path, command: &str) -> PathBuf {
    std::fs::read_dir(out)
        .unwrap()
        .map(|e| e.unwrap().path())
        .find(|p| p.file_name().unwrap().to_str().unwrap().starts_with(command))
        .expect("run directory")
}

fn small_square(dir: &Path, extra: &str) -> PathBuf {
    let path = dir.join("square.json");
    let text = format!(
        r#"{{"domain": {{"outer": {{"type": "polygon", "vertices": [[0,0],[1,0],[1,1],[0,1]]}}, "delta": 0.1}},
            "target": {{"type": "polygon", "vertices": [[0,0],[2,0],[2,1],[0,1]]}},
            "solver": {{"n_seeds": 64 {extra}}}}}"#
    );
    std::fs::write(&path, text).unwrap();
    path
}

#[test]
fn schema_errors_exit_2_with_field_path() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = tmp.path().join("bad.json");
    std::fs::write(&bad, r#"{"domain": {"outer": {"type": "polygon", "vertices": []}, "delta": -1}, "target": 3}"#).unwrap();
    let out = brenier(&["solve", "--config", bad.to_str().unwrap(), "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("target"), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn solve_verify_and_tamper() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_square(tmp.path(), "");
    let out = tmp.path().join("runs");
    let res = brenier(&["solve", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(0), "{}", String::from_utf8_lossy(&res.stderr));
    let dir = run_dir(&out, "solve");
    for f in ["potential.json", "solve_report.json", "cells.csv", "diagram.svg", "manifest.json", "config.json"] {
        assert!(dir.join(f).exists(), "{f}");
    }
    assert_eq!(brenier(&["verify", dir.to_str().unwrap()]).status.code(), Some(0));

    let csv = dir.join("cells.csv");
    let mut text = std::fs::read_to_string(&csv).unwrap();
    text.push_str("tampered\n");
    std::fs::write(&csv, text).unwrap();
    let res = brenier(&["verify", dir.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&res.stdout).contains("FAIL file cells.csv"));
}

#[test]
fn flags_override_the_file_and_are_hashed() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_square(tmp.path(), "");
    let out = tmp.path().join("runs");
    let res = brenier(&["solve", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--n-seeds", "32"]);
    assert_eq!(res.status.code(), Some(0));
    let stored = std::fs::read_to_string(run_dir(&out, "solve").join("config.json")).unwrap();
    assert!(stored.contains("\"n_seeds\": 32"), "{stored}");
}

#[test]
fn non_convergence_exits_3_and_keeps_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_square(tmp.path(), r#", "tol": 1e-15, "max_iter": 1"#);
    let out = tmp.path().join("runs");
    let res = brenier(&["solve", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(3), "{}", String::from_utf8_lossy(&res.stderr));
    let dir = run_dir(&out, "solve");
    assert!(dir.join("solve_report.json").exists() && dir.join("manifest.json").exists());
    assert_eq!(brenier(&["verify", dir.to_str().unwrap()]).status.code(), Some(4));
}

#[test]
fn plt_prints_residual_json() {
    let tmp = tempfile::tempdir().unwrap();
    let res = brenier(&["plt", "--fixture", "quadratic", "--grid", "21", "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(0), "{}", String::from_utf8_lossy(&res.stderr));
    let json: serde_json::Value =
        serde_json::Deserializer::from_slice(&res.stdout).into_iter().next().unwrap().unwrap();
    assert!(json["coarse"]["max_error"].as_f64().unwrap() < 1e-10);
    let even = brenier(&["plt", "--grid", "20", "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(even.status.code(), Some(2));
}

#[test]
fn bundled_configs_parse() {
    for name in ["annulus.json", "square.json"] {
        brenier_cli::ExperimentConfig::load(&configs().join(name)).unwrap();
    }
    brenier_cli::OracleConfig::load(&configs().join("oracle.json")).unwrap();
    brenier_cli::PltConfig::load(&configs().join("plt.json")).unwrap();
}
