use brenier_cli::config::{AnalysisConfig, RuntimeConfig};
use brenier_cli::{
    cmd_analyze, cmd_oracle, cmd_plt, cmd_report, cmd_solve, verify_run, with_threads, CliError, ExperimentConfig,
    Fixture, OracleConfig, PltConfig, RunArtifact,
};
use clap::{Args, Parser, Subcommand, ValueEnum};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

/// Brenier potentials of holed domains and audits of their regularity.
#[derive(Parser)]
#[command(name = "brenier", version)]
struct Cli {
    /// Worker threads (default: logical cores); overrides `runtime.threads`.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Parent directory of run directories; overrides `runtime.out_dir`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the semi-discrete transport problem.
    Solve {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        solver: SolverFlags,
    },
    /// Audit maximal and boundary sections of a solved potential.
    Analyze {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        potential: PathBuf,
        #[command(flatten)]
        analysis: AnalysisFlags,
    },
    /// Blow-up fit, norm refinement and Hölder quotients of a solved potential.
    Report {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        potential: PathBuf,
        #[command(flatten)]
        analysis: AnalysisFlags,
    },
    /// Run the report and audit on the exact annulus potential.
    Oracle {
        /// Oracle configuration (`r`, `delta`, `rng_seed`, `analysis`).
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        r: Option<f64>,
        #[arg(long)]
        delta: Option<f64>,
        #[command(flatten)]
        analysis: AnalysisFlags,
    },
    /// Partial Legendre transform residuals of a fixture.
    Plt {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_enum)]
        fixture: Option<FixtureArg>,
        /// Coarse grid size (odd).
        #[arg(long)]
        grid: Option<usize>,
    },
    /// Re-hash a run directory and list its checks.
    Verify { dir: PathBuf },
}

#[derive(Clone, Copy, ValueEnum)]
enum FixtureArg {
    Quadratic,
    FlatBoundary,
    Perturbed,
    Sheared,
}

impl From<FixtureArg> for Fixture {
    fn from(f: FixtureArg) -> Self {
        match f {
            FixtureArg::Quadratic => Fixture::Quadratic,
            FixtureArg::FlatBoundary => Fixture::FlatBoundary,
            FixtureArg::Perturbed => Fixture::Perturbed,
            FixtureArg::Sheared => Fixture::Sheared,
        }
    }
}

#[derive(Args)]
struct SolverFlags {
    #[arg(long)]
    n_seeds: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long)]
    rng_seed: Option<u64>,
    #[arg(long)]
    lloyd_steps: Option<usize>,
}

#[derive(Args)]
struct AnalysisFlags {
    #[arg(long, num_args = 1.., value_delimiter = ',')]
    heights: Option<Vec<f64>>,
    #[arg(long)]
    grid_level: Option<usize>,
    #[arg(long, num_args = 1.., value_delimiter = ',')]
    p_values: Option<Vec<f64>>,
    /// Fitting band `lo,hi`.
    #[arg(long, num_args = 2, value_delimiter = ',')]
    d_band: Option<Vec<f64>>,
    #[arg(long)]
    d_top: Option<f64>,
    #[arg(long)]
    angular: Option<usize>,
    #[arg(long)]
    sublayers: Option<usize>,
    #[arg(long)]
    holder_pairs: Option<usize>,
}

impl AnalysisFlags {
    fn apply(&self, a: &mut AnalysisConfig) {
        if let Some(v) = &self.heights {
            a.heights = v.clone();
        }
        if let Some(v) = self.grid_level {
            a.grid_level = v;
        }
        if let Some(v) = &self.p_values {
            a.p_values = v.clone();
        }
        if let Some(v) = &self.d_band {
            a.d_band = Some([v[0], v[1]]);
        }
        if let Some(v) = self.d_top {
            a.d_top = Some(v);
        }
        if let Some(v) = self.angular {
            a.angular = v;
        }
        if let Some(v) = self.sublayers {
            a.sublayers = v;
        }
        if let Some(v) = self.holder_pairs {
            a.holder_pairs = v;
        }
    }
}

fn runtime_overrides(cli: &Cli, rt: &mut RuntimeConfig) {
    if cli.threads.is_some() {
        rt.threads = cli.threads;
    }
    if cli.out.is_some() {
        rt.out_dir = cli.out.clone();
    }
}

fn experiment(cli: &Cli, path: &Path, edit: impl FnOnce(&mut ExperimentConfig)) -> Result<ExperimentConfig, CliError> {
    let mut cfg = ExperimentConfig::load(path)?;
    runtime_overrides(cli, &mut cfg.runtime);
    edit(&mut cfg);
    cfg.validate()?;
    Ok(cfg)
}

fn report(run: &RunArtifact) {
    for c in &run.manifest.checks {
        println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    println!("{}", run.dir.display());
}

fn execute(cli: &Cli) -> Result<ExitCode, CliError> {
    let run = match &cli.command {
        Command::Solve { config, solver } => {
            let cfg = experiment(cli, config, |c| {
                let s = &mut c.solver;
                s.n_seeds = solver.n_seeds.unwrap_or(s.n_seeds);
                s.tol = solver.tol.unwrap_or(s.tol);
                s.max_iter = solver.max_iter.unwrap_or(s.max_iter);
                s.rng_seed = solver.rng_seed.unwrap_or(s.rng_seed);
                s.lloyd_steps = solver.lloyd_steps.unwrap_or(s.lloyd_steps);
            })?;
            with_threads(cfg.runtime.threads, || cmd_solve(&cfg, &cfg.runtime.out_dir()))??
        }
        Command::Analyze { config, potential, analysis } => {
            let cfg = experiment(cli, config, |c| analysis.apply(&mut c.analysis))?;
            with_threads(cfg.runtime.threads, || cmd_analyze(&cfg, potential, &cfg.runtime.out_dir()))??
        }
        Command::Report { config, potential, analysis } => {
            let cfg = experiment(cli, config, |c| analysis.apply(&mut c.analysis))?;
            with_threads(cfg.runtime.threads, || cmd_report(&cfg, potential, &cfg.runtime.out_dir()))??
        }
        Command::Oracle { config, r, delta, analysis } => {
            let mut cfg = match config {
                Some(p) => OracleConfig::load(p)?,
                None => OracleConfig::default(),
            };
            runtime_overrides(cli, &mut cfg.runtime);
            cfg.r = r.unwrap_or(cfg.r);
            cfg.delta = delta.unwrap_or(cfg.delta);
            analysis.apply(&mut cfg.analysis);
            cfg.validate()?;
            with_threads(cfg.runtime.threads, || cmd_oracle(&cfg, &cfg.runtime.out_dir()))??
        }
        Command::Plt { config, fixture, grid } => {
            let mut cfg = match config {
                Some(p) => PltConfig::load(p)?,
                None => PltConfig::default(),
            };
            runtime_overrides(cli, &mut cfg.runtime);
            if let Some(f) = fixture {
                cfg.fixture = (*f).into();
            }
            cfg.grid = grid.unwrap_or(cfg.grid);
            cfg.validate()?;
            let run = with_threads(cfg.runtime.threads, || cmd_plt(&cfg, &cfg.runtime.out_dir()))??;
            print!("{}", std::fs::read_to_string(run.path("plt.json"))?);
            run
        }
        Command::Verify { dir } => {
            let v = verify_run(dir)?;
            print!("{}", v.summary());
            return Ok(if v.passed() { ExitCode::SUCCESS } else { ExitCode::from(4) });
        }
    };
    report(&run);
    Ok(if run.all_passed() { ExitCode::SUCCESS } else { ExitCode::from(4) })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
