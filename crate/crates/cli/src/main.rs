//! `cyclin`: sample factor chains, compute smallest singular values and run the Monte Carlo
//! experiments from JSON configs.

mod commands;
mod output;

use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;

#[derive(Parser, Debug)]
#[command(name = "cyclin", version, about = "Block-cyclic linearizations of random matrix products")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sample a factor chain and write each factor as CSV.
    Sample(SampleArgs),
    /// Smallest singular value of Y(z) for one sampled (or loaded) chain.
    Svmin(SvminArgs),
    /// Tail sweep of the smallest singular value.
    Sweep(ExperimentArgs),
    /// Block-mass profiles and incompressibility of null vectors.
    Nullmass(ExperimentArgs),
    /// Linear spectral statistic of the scaled product.
    Linstat(ExperimentArgs),
    /// Radial histogram of eigenvalues of the scaled product.
    Histogram(ExperimentArgs),
    /// Re-run an experiment from its manifest.
    Rerun(RerunArgs),
}

#[derive(Args, Debug)]
pub struct SampleArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub m: usize,
    /// Entry law, or a comma-separated list with one law per factor.
    #[arg(long, value_delimiter = ',', default_value = "ginibre")]
    pub dist: Vec<String>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(clap::ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum MethodArg {
    Dense,
    ShiftInvert,
    Both,
}

#[derive(Args, Debug)]
pub struct SvminArgs {
    #[arg(long, required_unless_present = "factors")]
    pub n: Option<usize>,
    #[arg(long, required_unless_present = "factors")]
    pub m: Option<usize>,
    #[arg(long, value_delimiter = ',', default_value = "ginibre")]
    pub dist: Vec<String>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub z_abs: f64,
    #[arg(long, default_value_t = 0.0)]
    pub z_arg: f64,
    #[arg(long, value_enum, default_value_t = MethodArg::ShiftInvert)]
    pub method: MethodArg,
    #[arg(long, default_value_t = 1e-12)]
    pub tol: f64,
    /// Use identity factors instead of sampling.
    #[arg(long, conflicts_with = "factors")]
    pub identity: bool,
    /// Load the factors from CSV files, in order.
    #[arg(long, value_delimiter = ',')]
    pub factors: Vec<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ExperimentArgs {
    /// JSON experiment config.
    pub config: PathBuf,
    #[arg(long, default_value = "results")]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct RerunArgs {
    pub manifest: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

/// Exit statuses: 0 success, 1 usage or config error, 2 failure budget exceeded,
/// 3 numerical error.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Budget(String),
    Numerical(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Budget(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl From<cyclin::Error> for CliError {
    fn from(e: cyclin::Error) -> Self {
        use cyclin::Error as E;
        match e {
            E::InvalidParameter(_) | E::UnknownDistribution { .. } | E::Inadmissible { .. } | E::Parse(_) => {
                CliError::Usage(e.to_string())
            }
            E::FailureBudget { .. } => CliError::Budget(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

fn configure_workers() -> Result<(), CliError> {
    if let Ok(v) = std::env::var("CYCLIN_WORKERS") {
        let n: usize = v.parse().map_err(|_| CliError::Usage(format!("CYCLIN_WORKERS must be a positive integer, got `{v}`")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global()
            .map_err(|e| CliError::Usage(e.to_string()))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let argv: Vec<String> = std::env::args().collect();
    let result = configure_workers().and_then(|_| match cli.command {
        Command::Sample(a) => commands::sample(&a),
        Command::Svmin(a) => commands::svmin(&a),
        Command::Sweep(a) => commands::experiment("sweep", &a, &argv),
        Command::Nullmass(a) => commands::experiment("nullmass", &a, &argv),
        Command::Linstat(a) => commands::experiment("linstat", &a, &argv),
        Command::Histogram(a) => commands::experiment("histogram", &a, &argv),
        Command::Rerun(a) => commands::rerun(&a, &argv),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let (CliError::Usage(m) | CliError::Budget(m) | CliError::Numerical(m)) = &e;
            eprintln!("error: {m}");
            ExitCode::from(e.code())
        }
    }
}
