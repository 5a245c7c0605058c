//! `potcast`: fit generalized Pareto tails, forecast peaks over high
//! thresholds and run the validation experiments from the command line.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod config;
mod error;
mod fit;
mod forecast;
mod hellinger;
mod input;
mod output;
mod run;
mod simulate;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use potcast::estimators::Method;

use crate::config::Theta;
use crate::error::CliResult;

#[derive(Debug, Parser)]
#[command(name = "potcast", version, about = "Peaks-over-threshold probabilistic forecasting")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit GP models to the excesses over the (n-k)-th order statistic.
    Fit(RunArgs),
    /// Extreme levels, extreme quantiles, predictive intervals and density grids.
    Forecast(ForecastArgs),
    /// Contraction or coverage experiments on synthetic oracles.
    Simulate(SimulateArgs),
    /// Hellinger distances between oracle excess laws and their GP limits.
    Hellinger(HellingerArgs),
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Flat `key = value` file; command-line flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Single-column CSV of observations.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Number of excesses.
    #[arg(long)]
    k: Option<usize>,
    /// Miscoverage of intervals (default 0.05).
    #[arg(long)]
    alpha: Option<f64>,
    /// Comma-separated subset of ml,gpwm,bayes (default all).
    #[arg(long, value_delimiter = ',')]
    methods: Vec<Method>,
    /// Retained posterior draws (default 20000).
    #[arg(long)]
    chain_length: Option<usize>,
    /// Burn-in iterations (default chain length / 5).
    #[arg(long)]
    burn_in: Option<usize>,
    /// Keep every n-th posterior state (default 1).
    #[arg(long)]
    thin: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (default current directory).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ForecastArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Scaling factors c >= 1 (default 2,3,4).
    #[arg(long, value_delimiter = ',')]
    c: Vec<f64>,
    /// Exceedance levels given directly (needed when gamma >= 0).
    #[arg(long, value_delimiter = ',')]
    p: Vec<f64>,
    /// Points per density grid (default 512).
    #[arg(long)]
    grid_points: Option<usize>,
    /// Skip fitting and use SIGMA,GAMMA (requires --threshold, --n, --k).
    #[arg(long, allow_hyphen_values = true)]
    theta: Option<Theta>,
    #[arg(long, allow_hyphen_values = true)]
    threshold: Option<f64>,
    #[arg(long)]
    n: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Experiment {
    Contraction,
    Coverage,
}

#[derive(Debug, Args)]
struct OracleArgs {
    /// exact-gp, exponential, burr or finite-endpoint.
    #[arg(long)]
    oracle: Option<String>,
    /// Extreme value index of the oracle.
    #[arg(long, allow_hyphen_values = true)]
    oracle_gamma: Option<f64>,
    /// Second-order index of the oracle (Burr and finite-endpoint).
    #[arg(long, allow_hyphen_values = true)]
    oracle_rho: Option<f64>,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    experiment: Experiment,
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    oracle: OracleArgs,
    /// Contraction grid of v values (default 1e2,1e3,1e4,1e5).
    #[arg(long, value_delimiter = ',')]
    v: Vec<f64>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    c: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    p: Vec<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    methods: Vec<Method>,
    /// Replicates per setting (at least 100, default 500).
    #[arg(long)]
    replicates: Option<usize>,
    /// Retained posterior draws per replicate (default 2000).
    #[arg(long)]
    chain_length: Option<usize>,
    #[arg(long)]
    burn_in: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct HellingerArgs {
    #[command(flatten)]
    oracle: OracleArgs,
    /// Thresholds t = F^{-1}(1 - 1/v) (default 1e2,1e3,1e4,1e5).
    #[arg(long, value_delimiter = ',')]
    v: Vec<f64>,
    /// Two GP laws SIGMA,GAMMA to compare instead of an oracle.
    #[arg(long, num_args = 1, allow_hyphen_values = true)]
    gp: Vec<Theta>,
    /// Initial quadrature panels (at least 64, default 256).
    #[arg(long)]
    grid_points: Option<usize>,
    /// Also write hellinger.json into this directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn dispatch(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Fit(args) => fit::run(&run::RunConfig::resolve(&args, None)?),
        Command::Forecast(args) => forecast::run(&run::RunConfig::resolve(&args.run, Some(&args))?),
        Command::Simulate(args) => simulate::run(&args),
        Command::Hellinger(args) => hellinger::run(&args),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("potcast: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
