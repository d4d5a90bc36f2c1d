//! Driver for the `brenier` binary: configuration, run directories and the
//! subcommands `solve`, `analyze`, `report`, `oracle`, `plt` and `verify`.
//!
//! Every command writes into `<out>/<command>-<id>`, where the id hashes the
//! canonical configuration and the input files, and finishes with a
//! `manifest.json` listing SHA-256 hashes of all artifacts together with
//! the pass/fail checks of the run.

pub mod commands;
pub mod config;
pub mod run;
pub mod svg;

pub use commands::{
    cmd_analyze, cmd_oracle, cmd_plt, cmd_report, cmd_solve, cmd_verify, AnalyzeSummary, PltReport, Report,
};
pub use config::{AnalysisConfig, ExperimentConfig, Fixture, OracleConfig, PltConfig, RuntimeConfig, SolverConfig};
pub use run::{verify_run, Check, Manifest, RunArtifact, Verification};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Schema(String),
    #[error("solver failed: {0}")]
    Solver(String),
    #[error("verification failed: {0}")]
    Verification(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Other(String),
}

impl CliError {
    /// 2 schema error, 3 solver failure, 4 verification failure, 1 otherwise.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Schema(_) => 2,
            CliError::Solver(_) => 3,
            CliError::Verification(_) => 4,
            CliError::Io(_) | CliError::Other(_) => 1,
        }
    }
}

/// Runs `f` on a pool of `threads` workers (all logical cores when `None`).
pub fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T, CliError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| CliError::Other(e.to_string()))?;
    Ok(pool.install(f))
}
