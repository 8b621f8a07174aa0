//! Command-line frontend: sampling, theory curves, factorization, seeded
//! experiments, and the verification suite.
//!
//! Exit codes: 0 success, 1 validation error, 2 numerical failure,
//! 3 failed verification check.

mod commands;
mod verify;

use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

/// Master seed used when neither `--seed` nor `RMT_SEED` is given.
pub const DEFAULT_MASTER_SEED: u64 = normeig::experiments::DEFAULT_MASTER_SEED;

#[derive(Debug, Parser)]
#[command(
    name = "normeig",
    version,
    about = "Min-max normalized eigenvalue statistics of Gaussian symmetric random matrices"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Sample one matrix and print its spectrum (raw and normalized)
    Sample(SampleArgs),
    /// Closed-form finite-size and asymptotic CDF curves
    TheoryCdf(TheoryCurveArgs),
    /// Closed-form finite-size and asymptotic coupling-error curves
    TheoryError(TheoryCurveArgs),
    /// Rank-k factorization of one sampled matrix and its residual
    Factorize(FactorizeArgs),
    /// Threshold-truncation coupling error of one sampled matrix
    CouplingError(CouplingErrorArgs),
    /// Seeded Monte Carlo experiment with CSV/JSON artifacts
    Experiment(ExperimentArgs),
    /// Analytic and Monte Carlo verification suite
    Verify(VerifyArgs),
}

/// Ensemble couplings shared by most subcommands.
#[derive(Debug, Args)]
struct CouplingArgs {
    /// Matrix dimension (at least 3)
    #[arg(long)]
    n: usize,
    /// Mean coupling scale J0 (positive)
    #[arg(long)]
    j0: f64,
    /// Disorder scale J1 (positive)
    #[arg(long, conflicts_with = "ratio")]
    j1: Option<f64>,
    /// Disorder-to-mean ratio; sets J1 = ratio * J0
    #[arg(long)]
    ratio: Option<f64>,
}

#[derive(Debug, Args)]
struct SampleArgs {
    #[command(flatten)]
    coupling: CouplingArgs,
    /// Master seed (overrides RMT_SEED; default 42)
    #[arg(long)]
    seed: Option<u64>,
    /// Trial index selecting the RNG stream
    #[arg(long, default_value_t = 0)]
    trial: u32,
    /// Output file (stdout when omitted)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output format
    #[arg(long, value_enum, default_value_t = commands::Format::Csv)]
    format: commands::Format,
}

#[derive(Debug, Args)]
struct TheoryCurveArgs {
    #[command(flatten)]
    coupling: CouplingArgs,
    /// Curve resolution on [0, 1]
    #[arg(long, default_value_t = 0.001)]
    grid_step: f64,
    /// Output file (stdout when omitted)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output format
    #[arg(long, value_enum, default_value_t = commands::Format::Csv)]
    format: commands::Format,
}

#[derive(Debug, Args)]
struct FactorizeArgs {
    #[command(flatten)]
    coupling: CouplingArgs,
    /// Factorization rank k in [1, n]
    #[arg(long)]
    rank: usize,
    /// Master seed (overrides RMT_SEED; default 42)
    #[arg(long)]
    seed: Option<u64>,
    /// Trial index selecting the RNG stream
    #[arg(long, default_value_t = 0)]
    trial: u32,
    /// Output file (stdout when omitted)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output format
    #[arg(long, value_enum, default_value_t = commands::Format::Csv)]
    format: commands::Format,
}

#[derive(Debug, Args)]
struct CouplingErrorArgs {
    #[command(flatten)]
    coupling: CouplingArgs,
    /// Truncation threshold on normalized eigenvalues, in [0, 1]
    #[arg(long)]
    alpha: f64,
    /// Master seed (overrides RMT_SEED; default 42)
    #[arg(long)]
    seed: Option<u64>,
    /// Trial index selecting the RNG stream
    #[arg(long, default_value_t = 0)]
    trial: u32,
    /// Output file (stdout when omitted)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output format
    #[arg(long, value_enum, default_value_t = commands::Format::Csv)]
    format: commands::Format,
}

#[derive(Debug, Args)]
struct ExperimentArgs {
    /// Which experiment to run
    #[arg(long, value_enum)]
    kind: commands::ExperimentKind,
    /// Master seed (overrides RMT_SEED; default 42)
    #[arg(long)]
    seed: Option<u64>,
    /// Trials per parameter set (default: the experiment's reference count)
    #[arg(long)]
    trials: Option<usize>,
    /// Matrix dimensions to sweep (default: the experiment's reference set)
    #[arg(long = "n")]
    n_values: Vec<usize>,
    /// J0 values to sweep
    #[arg(long = "j0")]
    j0_values: Vec<f64>,
    /// Explicit J1 values to sweep
    #[arg(long = "j1", conflicts_with = "ratio_values")]
    j1_values: Vec<f64>,
    /// Ratios J1/J0 to sweep
    #[arg(long = "ratio")]
    ratio_values: Vec<f64>,
    /// Grid resolution for comparison and alpha grids
    #[arg(long)]
    grid_step: Option<f64>,
    /// Directory for CSV/JSON artifacts (required)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for trial parallelism (default: all cores)
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    /// Run only the analytic checks (no Monte Carlo)
    #[arg(long)]
    fast: bool,
    /// Master seed (overrides RMT_SEED; default 42)
    #[arg(long)]
    seed: Option<u64>,
    /// Directory for the report and Monte Carlo artifacts
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for trial parallelism (default: all cores)
    #[arg(long)]
    threads: Option<usize>,
}

/// CLI failure carrying its exit code.
#[derive(Debug)]
pub enum CliError {
    /// Rejected input: exit 1, message names the offending flag.
    Validation(String),
    /// Numerical failure inside the pipeline: exit 2.
    Numerical(String),
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Numerical(_) => 2,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Validation(m) | CliError::Numerical(m) => m,
        }
    }
}

impl From<normeig::Error> for CliError {
    fn from(e: normeig::Error) -> Self {
        if e.is_numerical() {
            CliError::Numerical(e.to_string())
        } else {
            CliError::Validation(e.to_string())
        }
    }
}

/// Resolves the master seed: flag, then `RMT_SEED`, then the default.
fn resolve_seed(flag: Option<u64>) -> Result<u64, CliError> {
    if let Some(seed) = flag {
        return Ok(seed);
    }
    match std::env::var("RMT_SEED") {
        Ok(raw) => raw.parse().map_err(|_| {
            CliError::Validation(format!(
                "RMT_SEED must be an unsigned 64-bit integer, got {raw:?}"
            ))
        }),
        Err(_) => Ok(DEFAULT_MASTER_SEED),
    }
}

fn configure_threads(threads: Option<usize>) -> Result<(), CliError> {
    if let Some(t) = threads {
        if t == 0 {
            return Err(CliError::Validation("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| CliError::Validation(format!("--threads: {e}")))?;
    }
    Ok(())
}

fn main() {
    std::process::exit(run());
}

fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            // Help and version go to stdout, genuine errors to stderr.
            if code == 0 {
                print!("{e}");
            } else {
                eprint!("{e}");
            }
            return code;
        }
    };

    let outcome = match cli.command {
        Command::Sample(args) => commands::sample(args),
        Command::TheoryCdf(args) => commands::theory_cdf(args),
        Command::TheoryError(args) => commands::theory_error(args),
        Command::Factorize(args) => commands::factorize(args),
        Command::CouplingError(args) => commands::coupling_error(args),
        Command::Experiment(args) => commands::experiment(args),
        Command::Verify(args) => commands::verify(args),
    };

    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {}", e.message());
            e.exit_code()
        }
    }
}
