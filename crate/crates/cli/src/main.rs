//! `recordreg`: verify regression identities of record values, tabulate
//! residuals, simulate records and diagnose exponentiality.
//!
//! Exit status is 0 when every verdict meets its expectation and every
//! check passes, 2 otherwise, and 1 on usage or numerical errors.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(
    name = "recordreg",
    version,
    about = "Regression identities of upper record values"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Default)]
pub struct GlobalArgs {
    /// File of `key = value` lines supplying any flag not given on the command line
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Seed of all random streams [default: 20070424]
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output format: csv or json [default: json]
    #[arg(long, global = true)]
    pub format: Option<String>,
    /// Write the report here instead of standard output
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Largest residual for which an identity holds [default: 1e-6]
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Smallest residual that falsifies an identity [default: 1e-3]
    #[arg(long = "fail-floor", global = true)]
    pub fail_floor: Option<f64>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Run named verification scenarios (all of them by default)
    Verify {
        /// Scenario name; repeat or separate with commas
        #[arg(long)]
        scenario: Vec<String>,
    },
    /// Tabulate both sides of the identity over a grid of contexts
    ResidualGrid(GridArgs),
    /// Simulate records or conditional draws and summarize them
    Simulate(SimArgs),
    /// Check a distribution for exponentiality through identity residuals
    Diagnose(DiagnoseArgs),
    /// Run the arithmetic, geometric and harmonic mean scenarios
    Means,
    /// Compare kernel values and mean reductions with reference values
    Check {
        /// kernel-fd, kernel-closed-form, mean-reductions or pareto-invariance;
        /// repeat or separate with commas [default: all]
        #[arg(long)]
        name: Vec<String>,
    },
    /// List the scenario names accepted by `verify`
    Scenarios,
}

#[derive(Args, Debug, Default)]
pub struct GridArgs {
    /// Distribution, e.g. exp:c=1,l0=0 or pareto:a=1,c=2
    #[arg(long)]
    pub dist: Option<String>,
    /// Left gaps k, comma separated [default: 1]
    #[arg(long)]
    pub k: Option<String>,
    /// Right gaps r, comma separated [default: 1]
    #[arg(long)]
    pub r: Option<String>,
    /// Record index n [default: k+1]
    #[arg(long)]
    pub n: Option<usize>,
    /// Left conditioning value
    #[arg(long)]
    pub u: Option<f64>,
    /// Right conditioning value
    #[arg(long)]
    pub v: Option<f64>,
    /// Quantile pairs q1:q2 placing (u, v), comma separated
    #[arg(long)]
    pub q: Option<String>,
    /// h: power, power:P, reciprocal, neg-reciprocal:K or double-sqrt [default: power]
    #[arg(long)]
    pub h: Option<String>,
    /// standard or shifted-prime [default: standard]
    #[arg(long)]
    pub variant: Option<String>,
}

#[derive(Args, Debug, Default)]
pub struct SimArgs {
    /// records, stream, conditional or x2-ks [default: conditional]
    #[arg(long)]
    pub what: Option<String>,
    /// Distribution [default: exp:c=1,l0=0]
    #[arg(long)]
    pub dist: Option<String>,
    /// Left gap of the conditional law [default: 1]
    #[arg(long)]
    pub k: Option<usize>,
    /// Right gap of the conditional law [default: 1]
    #[arg(long)]
    pub r: Option<usize>,
    /// Record index; number of records for `records` [default: k+1, or 5]
    #[arg(long)]
    pub n: Option<usize>,
    /// Left conditioning value
    #[arg(long)]
    pub u: Option<f64>,
    /// Right conditioning value
    #[arg(long)]
    pub v: Option<f64>,
    /// Number of replicates or draws
    #[arg(long)]
    pub samples: Option<usize>,
    /// Draws scanned per stream replicate
    #[arg(long)]
    pub horizon: Option<u64>,
    /// Omit the table of draws
    #[arg(long)]
    pub summary_only: bool,
}

#[derive(Args, Debug, Default)]
pub struct DiagnoseArgs {
    /// Distribution to diagnose
    #[arg(long)]
    pub dist: Option<String>,
    /// Quantile pairs q1:q2, comma separated [default: 0.2:0.5,0.3:0.8,0.6:0.9]
    #[arg(long)]
    pub q: Option<String>,
    /// Gaps k:r, comma separated [default: 1:1,2:1,3:1,2:2,2:3]
    #[arg(long)]
    pub gaps: Option<String>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let usage = e.use_stderr();
            let _ = e.print();
            return ExitCode::from(if usage { 1 } else { 0 });
        }
    };
    match commands::run(cli) {
        Ok(status) => ExitCode::from(status),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
