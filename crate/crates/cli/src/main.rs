//! `qforecast`: generate data, train models over several seeds, tabulate
//! results and write forecasts from checkpoints.
//!
//! Exit codes: 0 success, 2 configuration error, 3 data error, 4 run failure.
//! `QFORECAST_THREADS` sets the worker-thread count.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

/// Error tagged with the exit code it maps to.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub error: anyhow::Error,
}

pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_DATA: u8 = 3;
pub const EXIT_RUN: u8 = 4;

impl Failure {
    pub fn new(code: u8, error: impl Into<anyhow::Error>) -> Self {
        Self {
            code,
            error: error.into(),
        }
    }
}

/// Classifies library errors by what the user has to fix.
pub fn code_of(e: &qforecast::Error) -> u8 {
    use qforecast::Error::*;
    match e {
        QubitCount(_) | QubitIndex { .. } | InvalidGate(_) | BindingLength { .. } | Config(_) => EXIT_CONFIG,
        Data(_) | Csv { .. } | Io { .. } => EXIT_DATA,
        Shape { .. } | NonFinite(_) | Serde(_) => EXIT_RUN,
    }
}

pub trait OrExit<T> {
    /// Tags the error with `code`.
    fn or_exit(self, code: u8) -> Result<T, Failure>;
}

impl<T, E: Into<anyhow::Error>> OrExit<T> for Result<T, E> {
    fn or_exit(self, code: u8) -> Result<T, Failure> {
        self.map_err(|e| Failure::new(code, e))
    }
}

pub trait Classify<T> {
    /// Tags the error by its kind, with `context` prepended.
    fn classify(self, context: &str) -> Result<T, Failure>;
}

impl<T> Classify<T> for qforecast::Result<T> {
    fn classify(self, context: &str) -> Result<T, Failure> {
        self.map_err(|e| {
            let code = code_of(&e);
            Failure::new(code, anyhow::Error::new(e).context(context.to_string()))
        })
    }
}

#[derive(Debug, Parser)]
#[command(name = "qforecast", version, about = "Quantum and hybrid time-series forecasting")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DataSource {
    Lorenz,
    Surrogate,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a synthetic series to CSV.
    GenerateData {
        #[arg(long, value_enum)]
        source: DataSource,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        points: Option<usize>,
        /// Euler step (Lorenz only).
        #[arg(long)]
        dt: Option<f64>,
        /// Channel count (surrogate only).
        #[arg(long)]
        channels: Option<usize>,
        /// Noise seed (surrogate only).
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Train every seed of an experiment and write its artifacts.
    Train {
        #[arg(long)]
        config: PathBuf,
        /// Output directory; overrides `output_dir` in the config.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Comma-separated seeds; overrides the config.
        #[arg(long, value_delimiter = ',')]
        seeds: Option<Vec<u64>>,
    },
    /// Merge the summaries of several run directories into one table.
    Report {
        #[arg(required = true)]
        runs: Vec<PathBuf>,
        /// Also write the table as CSV.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Forecast the validation split with a checkpoint.
    Forecast {
        #[arg(long)]
        checkpoint: PathBuf,
        /// Experiment config describing the dataset.
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// 1-based horizon steps to write; all when omitted.
        #[arg(long, value_delimiter = ',')]
        horizons: Option<Vec<usize>>,
    },
}

fn init_threads() -> Result<(), Failure> {
    if let Ok(v) = std::env::var("QFORECAST_THREADS") {
        let n: usize = v
            .parse()
            .map_err(|_| Failure::new(EXIT_CONFIG, anyhow::anyhow!("QFORECAST_THREADS must be a positive integer, got '{v}'")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .or_exit(EXIT_CONFIG)?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    init_threads()?;
    match cli.command {
        Command::GenerateData {
            source,
            out,
            points,
            dt,
            channels,
            seed,
        } => commands::generate_data(source, &out, points, dt, channels, seed),
        Command::Train { config, out, seeds } => commands::train(&config, out, seeds),
        Command::Report { runs, out } => commands::report(&runs, out.as_deref()),
        Command::Forecast {
            checkpoint,
            config,
            out,
            horizons,
        } => commands::forecast(&checkpoint, &config, &out, horizons),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}
