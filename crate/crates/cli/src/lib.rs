//! The `extval` command line: weighting, estimation, diagnostics and the
//! synthetic study.
//!
//! Exit codes: 0 success, 1 usage or I/O error, 2 unattainable moments.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

mod commands;
mod io;
pub mod report;

pub use report::SCHEMA_VERSION;

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_INFEASIBLE: i32 = 2;

const VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), " (report schema ", "1", ")");

#[derive(Debug, Parser)]
#[command(name = "extval", version = VERSION, about = "Estimate model performance on an external sample from its summary statistics")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalOpts,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalOpts {
    /// Worker threads for bootstrap and grid runs (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,
    /// Refuse to run randomized commands without --seed.
    #[arg(long, global = true)]
    pub strict: bool,
    /// Seed for every random draw; drawn from entropy and reported when absent.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Name of the binary outcome column in sample CSVs.
    #[arg(long, global = true, default_value = "y")]
    pub outcome_column: String,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve for weights that reproduce the external statistics.
    Balance(BalanceArgs),
    /// Estimate external metrics with bootstrap intervals.
    Estimate(EstimateArgs),
    /// Compare internal ranges with the external targets.
    Diagnose(DiagnoseArgs),
    /// Write internal and external samples from the structural model.
    Simulate(SimulateArgs),
    /// Run the synthetic study over a grid of shift strengths and sizes.
    Experiment(ExperimentArgs),
}

#[derive(Debug, Args)]
pub struct SolverArgs {
    /// KL weight in the relaxed problem.
    #[arg(long, default_value_t = 1e-6)]
    pub lambda: f64,
    /// Floor applied to every weight.
    #[arg(long, default_value_t = 1e-6)]
    pub min_weight: f64,
    /// Transformed columns with a smaller SD are dropped.
    #[arg(long, default_value_t = 1e-4)]
    pub sd_cutoff: f64,
}

#[derive(Debug, Args)]
pub struct BalanceArgs {
    /// Internal sample CSV.
    #[arg(long)]
    pub internal: PathBuf,
    /// Statistics JSON (term list and target values).
    #[arg(long)]
    pub stats: PathBuf,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Weights CSV (rowIndex, weight).
    #[arg(long)]
    pub out_weights: PathBuf,
    /// Solution report JSON; printed to stdout when omitted.
    #[arg(long)]
    pub out_report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    /// Internal sample CSV.
    #[arg(long)]
    pub internal: PathBuf,
    /// Statistics JSON (term list and target values).
    #[arg(long)]
    pub stats: PathBuf,
    /// Model scores CSV (rowIndex, score) aligned with the internal sample.
    #[arg(long)]
    pub scores: PathBuf,
    /// Comma-separated metrics to estimate.
    #[arg(long, value_delimiter = ',', default_value = "auc,logloss,brier")]
    pub metrics: Vec<extval_core::metrics::Metric>,
    /// Bootstrap replicates.
    #[arg(long, default_value_t = 1000)]
    pub bootstrap: usize,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Report JSON; printed to stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DiagnoseArgs {
    /// Internal sample CSV.
    #[arg(long)]
    pub internal: PathBuf,
    /// Statistics JSON (term list and target values).
    #[arg(long)]
    pub stats: PathBuf,
    /// Transformed columns with a smaller SD are reported as pruned.
    #[arg(long, default_value_t = 1e-4)]
    pub sd_cutoff: f64,
    /// Also write the JSON report here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Scale of the environment-dependent correlation shift.
    #[arg(long, default_value_t = 0.0)]
    pub sigma_xah: f64,
    /// Number of features.
    #[arg(long, default_value_t = 10)]
    pub p: usize,
    /// Rows in each of the three samples.
    #[arg(long, default_value_t = 5000)]
    pub n: usize,
    /// Directory for the sample CSVs and statistics JSON.
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    /// Comma-separated shift scales.
    #[arg(long, value_delimiter = ',', default_value = "0,0.5,1")]
    pub sigma_xah: Vec<f64>,
    /// Comma-separated sample sizes.
    #[arg(long, value_delimiter = ',', default_value = "200,500,1000,2000,5000")]
    pub n: Vec<usize>,
    /// Repetitions (model draws) per cell.
    #[arg(long, default_value_t = 200)]
    pub reps: usize,
    /// Number of features.
    #[arg(long, default_value_t = 10)]
    pub p: usize,
    /// Summary and raw results as JSON.
    #[arg(long)]
    pub out_json: Option<PathBuf>,
    /// One row per repetition.
    #[arg(long)]
    pub out_csv: Option<PathBuf>,
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code. Messages go to stdout/stderr.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match commands::dispatch(&cli) {
        Ok(code) => code,
        Err(e) if is_broken_pipe(&e) => EXIT_ERROR,
        Err(e) => {
            eprintln!("error: {e:#}");
            EXIT_ERROR
        }
    }
}

/// A downstream reader closed stdout, as with `extval diagnose ... | head`.
fn is_broken_pipe(e: &anyhow::Error) -> bool {
    e.chain()
        .filter_map(|c| c.downcast_ref::<std::io::Error>())
        .any(|io| io.kind() == std::io::ErrorKind::BrokenPipe)
}
