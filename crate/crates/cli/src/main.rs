//! `embedcal`: batch harness for the linear and thermal calibration studies.
//!
//! Exit codes: 0 on success, 2 when some rows are flagged (unconverged
//! chains or failed scan points), 1 on a hard failure.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use commands::{Context, Status};
use config::{ExperimentConfig, ExperimentKind};
use output::Layout;

const OUT_ENV: &str = "EMBEDCAL_OUT";
const DEFAULT_OUT: &str = "embedcal-out";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error("missing input {0} (run `embedcal generate` / `embedcal calibrate` first)")]
    MissingInput(PathBuf),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Core(#[from] embedcal::Error),
}

impl CliError {
    pub(crate) fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "embedcal",
    version,
    about = "Calibration with embedded model-form error: data generation, calibration, scans and QoI push-forward"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate synthetic data sets into <out>/data.
    Generate(Common),
    /// Calibrate every (likelihood, seed) pair; writes chains and summary tables.
    Calibrate(Common),
    /// Run a sensitivity scan (noise, offset or outlier); writes scan.csv.
    Scan(Common),
    /// Push stored chains through the quantity of interest; writes <out>/qoi.
    Push(Common),
    /// generate, then scan or calibrate + push, depending on the experiment.
    All(Common),
}

#[derive(Debug, Args)]
struct Common {
    /// Experiment configuration (TOML).
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Experiment to run with default settings when no config is given.
    #[arg(long, value_enum)]
    experiment: Option<ExperimentKind>,
    /// Run a single seed instead of the configured list.
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
    /// Output directory. Falls back to the config's output_dir, then to
    /// $EMBEDCAL_OUT, then to ./embedcal-out.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Worker threads for independent jobs (0: one per core).
    #[arg(long, value_name = "N", default_value_t = 0)]
    jobs: usize,
    /// Cap on sampler iterations per chain.
    #[arg(long, value_name = "N")]
    max_samples: Option<usize>,
}

impl Common {
    fn context(&self) -> Result<Context, CliError> {
        let (mut config, source) = match (&self.config, self.experiment) {
            (Some(path), _) => {
                let (c, text) = ExperimentConfig::load(path)?;
                (c, Some(text))
            }
            (None, Some(kind)) => (ExperimentConfig::new(kind), None),
            (None, None) => return Err(CliError::Config("pass --config or --experiment".into())),
        };
        if let (Some(_), Some(kind)) = (&self.config, self.experiment) {
            if kind != config.experiment {
                return Err(CliError::Config(format!(
                    "--experiment {kind:?} contradicts the config ({:?})",
                    config.experiment
                )));
            }
        }
        if let Some(seed) = self.seed {
            config.seeds = Some(vec![seed]);
        }
        if let Some(n) = self.max_samples {
            config.sampler.max_samples = Some(n);
        }
        config.validate()?;
        let root = self
            .out
            .clone()
            .or_else(|| config.output_dir.clone())
            .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
        std::fs::create_dir_all(&root).map_err(|e| CliError::io(&root, e))?;
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(self.jobs)
            .build()
            .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
        Ok(Context {
            config,
            config_source: source,
            layout: Layout::new(root),
            pool,
        })
    }
}

fn run(cli: Cli) -> Result<Status, CliError> {
    match cli.command {
        Command::Generate(c) => commands::generate(&c.context()?),
        Command::Calibrate(c) => commands::calibrate(&c.context()?),
        Command::Scan(c) => commands::scan(&c.context()?),
        Command::Push(c) => commands::push(&c.context()?),
        Command::All(c) => commands::all(&c.context()?),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(Status::Ok) => ExitCode::SUCCESS,
        Ok(Status::Partial) => {
            log::warn!("finished with flagged rows");
            ExitCode::from(2)
        }
        Err(e) => {
            log::error!("{e}");
            ExitCode::from(1)
        }
    }
}
