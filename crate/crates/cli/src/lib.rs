//! The `ksm` command-line tool.
//!
//! `solve` fits one subspace and prints a JSON report. `benchmark` sweeps `k`
//! and methods into a CSV table. `oracle` runs the brute-force grids in two or
//! three dimensions, while `selftest` runs the built-in verification suites.
//!
//! Exit codes: 0 success, 1 failed self-test, 2 bad arguments, 3 unreadable
//! input, 4 solver failure.

pub mod commands;
pub mod ingest;
pub mod report;
pub mod selftest;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

pub use ingest::{ingest, parse_str, Format, IngestError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_SELFTEST: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_INPUT: i32 = 3;
pub const EXIT_SOLVER: i32 = 4;

#[derive(Debug, Parser)]
#[command(
    name = "ksm",
    version,
    about = "Approximate k-subspace median with a sqrt(d) certificate"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit one subspace and print a JSON report.
    Solve(SolveArgs),
    /// Sweep k and methods over one dataset and write CSV.
    Benchmark(BenchmarkArgs),
    /// Brute-force optimum for d = 2 or d = 3.
    Oracle(OracleArgs),
    /// Run the built-in verification suites.
    Selftest(SelftestArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Algorithm {
    Ksm,
    Svd,
    Sampling,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Ksm => "ksm",
            Algorithm::Svd => "svd",
            Algorithm::Sampling => "sampling",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EpsilonMode {
    /// `--epsilon` is multiplied by the objective at the starting point.
    Relative,
    Absolute,
}

#[derive(Debug, Clone, Args)]
pub struct InputArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value = "auto")]
    pub format: Format,
}

#[derive(Debug, Clone, Args)]
pub struct SolverArgs {
    #[arg(long, default_value_t = 1e-6)]
    pub epsilon: f64,
    #[arg(long, value_enum, default_value = "relative")]
    pub epsilon_mode: EpsilonMode,
    #[arg(long, default_value_t = 2.0)]
    pub mu: f64,
    /// Trials for the sampling baseline.
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    /// Seed for the sampling baseline (ChaCha8).
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Report zero for every timing field.
    #[arg(long)]
    pub no_timing: bool,
}

#[derive(Debug, Clone, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long)]
    pub k: usize,
    #[arg(long, value_enum, default_value = "ksm")]
    pub algorithm: Algorithm,
    /// Fit an affine k-flat instead of a subspace.
    #[arg(long)]
    pub affine: bool,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Output file, `-` for stdout.
    #[arg(long, default_value = "-")]
    pub output: String,
}

#[derive(Debug, Clone, Args)]
pub struct BenchmarkArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long)]
    pub k_min: usize,
    #[arg(long)]
    pub k_max: usize,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "ksm,svd")]
    pub algorithms: Vec<Algorithm>,
    #[arg(long, default_value_t = 3)]
    pub repeats: usize,
    /// Dataset label for the CSV; defaults to the input file stem.
    #[arg(long)]
    pub dataset: Option<String>,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(long, default_value = "-")]
    pub output: String,
}

#[derive(Debug, Clone, Args)]
pub struct OracleArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long)]
    pub k: usize,
    #[arg(long, default_value_t = 10_000)]
    pub resolution: usize,
    #[arg(long, default_value = "-")]
    pub output: String,
}

#[derive(Debug, Clone, Args)]
pub struct SelftestArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Run a reduced set of suites.
    #[arg(long)]
    pub quick: bool,
    /// Deliberately corrupt one quantity (negative control for the suites).
    #[arg(long, hide = true)]
    pub inject_fault: Option<String>,
}

/// Parses `args` (program name first) and runs the command, returning the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let result = match cli.command {
        Command::Solve(a) => commands::solve(&a),
        Command::Benchmark(a) => commands::benchmark(&a),
        Command::Oracle(a) => commands::oracle(&a),
        Command::Selftest(a) => return selftest::run(&a),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
