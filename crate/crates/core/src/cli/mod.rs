//! Command-line front end.

pub mod config;
pub mod scenarios;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use config::{ConfigFile, NoiseKind, Overrides, ResolvedConfig, Scenario};
use scenarios::{run_scenario, Check, ScenarioOutput};

pub const EXIT_OK: u8 = 0;
pub const EXIT_ERROR: u8 = 1;
pub const EXIT_CHECKS_FAILED: u8 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "collapse-lab",
    version,
    about = "Monte Carlo state reduction of an entangled qubit pair"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Single trajectories and ensemble averages of |α|².
    Fig1(RunArgs),
    /// Entropy time series for correlated and white noise.
    Fig2(RunArgs),
    /// Entropies before and after a projective interruption.
    Interrupt(RunArgs),
    /// Outcome frequencies against the initial weight.
    Born(RunArgs),
    /// White-noise reduction against pure dephasing.
    Dephasing(RunArgs),
    /// Re-run a previous run from its manifest.
    Replay(ReplayArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// TOML file with `[common]` and per-scenario sections.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub n_traj: Option<usize>,
    #[arg(long)]
    pub alpha0_sq: Option<f64>,
    #[arg(long)]
    pub j: Option<f64>,
    #[arg(long)]
    pub g: Option<f64>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long)]
    pub t_max: Option<f64>,
    #[arg(long)]
    pub record_every: Option<f64>,
    #[arg(long, value_enum)]
    pub noise: Option<NoiseKind>,
    #[arg(long)]
    pub tau: Option<f64>,
    #[arg(long)]
    pub g0: Option<f64>,
    /// Stratify the frozen-noise draws over the trajectory index.
    #[arg(long)]
    pub stratified: bool,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Number of single trajectories written by `fig1`.
    #[arg(long)]
    pub samples: Option<usize>,
    /// Comma-separated interruption times, in units of 1/J.
    #[arg(long, value_delimiter = ',')]
    pub t_interrupt: Option<Vec<f64>>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
    /// Worker threads; results do not depend on it.
    #[arg(long, env = "COLLAPSE_LAB_WORKERS")]
    pub workers: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ReplayArgs {
    pub manifest: PathBuf,
    #[command(flatten)]
    pub output: OutputArgs,
}

impl RunArgs {
    fn overrides(&self) -> Overrides {
        Overrides {
            n_traj: self.n_traj,
            alpha0_sq: self.alpha0_sq,
            j: self.j,
            g: self.g,
            lambda: self.lambda,
            dt: self.dt,
            t_max: self.t_max,
            record_every: self.record_every,
            noise: self.noise,
            tau: self.tau,
            g0: self.g0,
            stratified: self.stratified.then_some(true),
            gamma: self.gamma,
            seed: self.seed,
            samples: self.samples,
            t_interrupt: self.t_interrupt.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub scenario: Scenario,
    pub config: ResolvedConfig,
    pub master_seed: u64,
    pub version: String,
    pub started_at: String,
    pub wall_clock_seconds: f64,
    /// File names, relative to the manifest.
    pub outputs: Vec<String>,
    pub checks: Vec<Check>,
    pub passed: bool,
}

impl RunManifest {
    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::param("manifest", format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| Error::param("manifest", format!("{}: {e}", path.display())))
    }
}

/// Result of one invocation, for callers that want more than an exit code.
#[derive(Debug, Clone)]
pub struct RunReport {
    pub manifest_path: PathBuf,
    pub manifest: RunManifest,
}

pub fn main_entry() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(report) => {
            for c in &report.manifest.checks {
                let tag = if c.passed { "PASS" } else { "FAIL" };
                eprintln!("{tag} {}: {}", c.name, c.detail);
            }
            println!("{}", report.manifest_path.display());
            ExitCode::from(if report.manifest.passed {
                EXIT_OK
            } else {
                EXIT_CHECKS_FAILED
            })
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}

pub fn execute(cli: &Cli) -> Result<RunReport> {
    match &cli.command {
        Command::Fig1(a) => run(Scenario::Fig1, a),
        Command::Fig2(a) => run(Scenario::Fig2, a),
        Command::Interrupt(a) => run(Scenario::Interrupt, a),
        Command::Born(a) => run(Scenario::Born, a),
        Command::Dephasing(a) => run(Scenario::Dephasing, a),
        Command::Replay(a) => replay(a),
    }
}

fn run(scenario: Scenario, args: &RunArgs) -> Result<RunReport> {
    let file = args.config.as_deref().map(ConfigFile::load).transpose()?;
    let cfg = ResolvedConfig::resolve(scenario, file.as_ref(), &args.overrides())?;
    execute_config(&cfg, &args.output, Vec::new())
}

fn replay(args: &ReplayArgs) -> Result<RunReport> {
    let previous = RunManifest::load(&args.manifest)?;
    let mut cfg = previous.config.clone();
    cfg.scenario = previous.scenario;
    cfg.seed = previous.master_seed;
    cfg.validate()?;
    let base = args.manifest.parent().unwrap_or(Path::new("."));
    let originals = previous
        .outputs
        .iter()
        .map(|name| std::fs::read(base.join(name)).map_err(|e| Error::param("manifest", format!("{name}: {e}"))))
        .collect::<Result<Vec<_>>>()?;
    execute_config(&cfg, &args.output, originals)
}

fn with_workers<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match workers {
        None => Ok(f()),
        Some(0) => Err(Error::param("workers", "must be at least 1")),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::param("workers", e.to_string()))?;
            Ok(pool.install(f))
        }
    }
}

/// Runs `cfg` and writes its data files and manifest into `output.out_dir`.
/// When `originals` is non-empty the new data are compared byte for byte.
pub fn execute_config(cfg: &ResolvedConfig, output: &OutputArgs, originals: Vec<Vec<u8>>) -> Result<RunReport> {
    let started = chrono::Utc::now();
    let clock = Instant::now();
    let ScenarioOutput { artifacts, mut checks } = with_workers(output.workers, || run_scenario(cfg))??;
    let wall_clock_seconds = clock.elapsed().as_secs_f64();

    if !originals.is_empty() {
        let same = originals.len() == artifacts.len() && originals.iter().zip(&artifacts).all(|(o, a)| *o == a.bytes);
        checks.push(Check {
            name: "replay_identical".into(),
            passed: same,
            detail: if same {
                "data files match the original run byte for byte".into()
            } else {
                "data files differ from the original run".into()
            },
        });
    }

    std::fs::create_dir_all(&output.out_dir)
        .map_err(|e| Error::param("out_dir", format!("{}: {e}", output.out_dir.display())))?;
    let stem = format!("{}_{}", cfg.scenario.name(), started.format("%Y%m%dT%H%M%S%3fZ"));
    let mut outputs = Vec::new();
    for a in &artifacts {
        let name = match &a.suffix {
            Some(s) => format!("{stem}_{s}.{}", a.extension),
            None => format!("{stem}.{}", a.extension),
        };
        write(&output.out_dir.join(&name), &a.bytes)?;
        outputs.push(name);
    }
    let passed = checks.iter().all(|c| c.passed);
    let manifest = RunManifest {
        scenario: cfg.scenario,
        config: cfg.clone(),
        master_seed: cfg.seed,
        version: crate::VERSION.to_string(),
        started_at: started.to_rfc3339(),
        wall_clock_seconds,
        outputs,
        checks,
        passed,
    };
    let manifest_path = output.out_dir.join(format!("{stem}.manifest.json"));
    let mut bytes = serde_json::to_vec_pretty(&manifest).expect("manifest serializes");
    bytes.push(b'\n');
    write(&manifest_path, &bytes)?;
    Ok(RunReport {
        manifest_path,
        manifest,
    })
}

fn write(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| Error::param("out_dir", format!("{}: {e}", path.display())))
}
