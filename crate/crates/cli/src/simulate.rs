use std::fmt::Write as _;
use std::fs;

use potcast::estimators::Method;
use potcast::predictive::Level;
use potcast::validation::{contraction_experiment, simulate_coverage, CoverageSettings, DistributionOracle};

use crate::config::ConfigFile;
use crate::error::{CliError, CliResult};
use crate::output::{cell, ensure_dir};
use crate::{Experiment, OracleArgs, SimulateArgs};

const SIMULATE_KEYS: &[&str] = &[
    "oracle",
    "oracle-gamma",
    "oracle-rho",
    "v",
    "n",
    "k",
    "c",
    "p",
    "alpha",
    "methods",
    "replicates",
    "chain-length",
    "burn-in",
    "seed",
    "out",
];

pub const DEFAULT_V_GRID: [f64; 4] = [1e2, 1e3, 1e4, 1e5];

/// Oracle from its name with optional overrides of `gamma` and `rho`.
pub fn build_oracle(name: &str, gamma: Option<f64>, rho: Option<f64>) -> CliResult<DistributionOracle> {
    let base = DistributionOracle::from_name(name).map_err(|e| CliError::Usage(e.to_string()))?;
    let oracle = match base {
        DistributionOracle::ExactGp(p) => {
            if rho.is_some() {
                return Err(CliError::Usage("the exact-gp oracle has no second-order index".into()));
            }
            DistributionOracle::exact_gp(p.sigma(), gamma.unwrap_or(p.gamma()))?
        }
        DistributionOracle::Exponential { .. } => {
            if gamma.is_some() || rho.is_some() {
                return Err(CliError::Usage("the exponential oracle takes no gamma or rho".into()));
            }
            base
        }
        DistributionOracle::Burr { .. } => DistributionOracle::burr(
            gamma.unwrap_or(base.gamma()),
            rho.unwrap_or(base.rho().expect("Burr has rho")),
        )?,
        DistributionOracle::FiniteEndpointPower { endpoint, .. } => DistributionOracle::finite_endpoint_power(
            gamma.unwrap_or(base.gamma()),
            rho.unwrap_or(base.rho().expect("finite-endpoint oracle has rho")),
            endpoint,
        )?,
    };
    Ok(oracle)
}

pub fn oracle_from_args(args: &OracleArgs, cfg: &ConfigFile, default: &str) -> CliResult<DistributionOracle> {
    let name = cfg
        .value("oracle", args.oracle.clone())?
        .unwrap_or_else(|| default.to_string());
    build_oracle(
        &name,
        cfg.value("oracle-gamma", args.oracle_gamma)?,
        cfg.value("oracle-rho", args.oracle_rho)?,
    )
}

pub fn run(args: &SimulateArgs) -> CliResult<()> {
    let cfg = ConfigFile::load(args.config.as_deref(), SIMULATE_KEYS)?;
    let out = cfg.value("out", args.out.clone())?.unwrap_or_else(|| ".".into());
    match args.experiment {
        Experiment::Contraction => {
            let oracle = oracle_from_args(&args.oracle, &cfg, "burr")?;
            let v = cfg.list("v", &args.v)?.unwrap_or_else(|| DEFAULT_V_GRID.to_vec());
            let table = contraction_experiment(&oracle, &v)?;
            ensure_dir(&out)?;
            let mut text = String::from("v,H,absA,ratio\n");
            for r in &table.rows {
                let _ = writeln!(
                    text,
                    "{},{},{},{}",
                    cell(Some(r.v)),
                    cell(Some(r.h)),
                    cell(Some(r.abs_a)),
                    cell(r.ratio)
                );
            }
            fs::write(out.join("contraction.csv"), text)?;
            println!("{}", table.oracle);
            for r in &table.rows {
                println!("v = {:>10.0}  H = {:.6e}  |A| = {:.6e}", r.v, r.h, r.abs_a);
            }
            match (table.min_ratio(), table.max_ratio()) {
                (Some(lo), Some(hi)) => println!("H/|A| in [{lo:.6}, {hi:.6}], spread {:.4}", hi / lo),
                _ => println!(
                    "A vanishes identically; max H = {:.3e}",
                    table.rows.iter().map(|r| r.h).fold(0.0, f64::max)
                ),
            }
            Ok(())
        }
        Experiment::Coverage => {
            let oracle = oracle_from_args(&args.oracle, &cfg, "exact-gp")?;
            let n = cfg.value("n", args.n)?.unwrap_or(5000);
            let k = cfg.value("k", args.k)?.unwrap_or(500);
            let replicates = cfg.value("replicates", args.replicates)?.unwrap_or(500);
            if replicates < 100 {
                return Err(CliError::Usage(format!(
                    "replicates must be at least 100, got {replicates}"
                )));
            }
            let alpha = cfg.value("alpha", args.alpha)?.unwrap_or(0.05);
            let chain_length = cfg.value("chain-length", args.chain_length)?.unwrap_or(2000);
            let burn_in = cfg.value("burn-in", args.burn_in)?;
            let seed = cfg.value("seed", args.seed)?.unwrap_or(1);
            let methods = cfg.list("methods", &args.methods)?.unwrap_or_else(|| vec![Method::Ml]);
            let mut levels: Vec<Level> = Vec::new();
            levels.extend(
                cfg.list::<f64>("c", &args.c)?
                    .unwrap_or_default()
                    .into_iter()
                    .map(Level::Scaling),
            );
            levels.extend(
                cfg.list::<f64>("p", &args.p)?
                    .unwrap_or_default()
                    .into_iter()
                    .map(Level::Probability),
            );
            if levels.is_empty() {
                levels.push(Level::Probability(k as f64 / n as f64));
            }
            ensure_dir(&out)?;
            let mut text = String::from(
                "oracle,method,n,k,level_kind,level,alpha,replicates,failures,nominal,empirical,mc_stderr\n",
            );
            for &method in &methods {
                for &level in &levels {
                    let settings = CoverageSettings {
                        oracle,
                        n,
                        k,
                        level,
                        alpha,
                        method,
                        replicates,
                        seed,
                        chain_length,
                        burn_in,
                    };
                    let r = simulate_coverage(&settings)?;
                    let (kind, value) = match level {
                        Level::Probability(p) => ("p", p),
                        Level::Scaling(c) => ("c", c),
                    };
                    let _ = writeln!(
                        text,
                        "\"{}\",{},{},{},{},{},{},{},{},{},{},{}",
                        r.oracle,
                        method.label(),
                        n,
                        k,
                        kind,
                        cell(Some(value)),
                        cell(Some(alpha)),
                        r.replicates,
                        r.failures,
                        cell(Some(r.nominal)),
                        cell(Some(r.empirical)),
                        cell(Some(r.mc_stderr))
                    );
                    println!(
                        "{:>6} {kind}={value}: coverage {:.4} (nominal {:.2}, MC s.e. {:.4}, {} failures)",
                        method.label(),
                        r.empirical,
                        r.nominal,
                        r.mc_stderr,
                        r.failures
                    );
                }
            }
            fs::write(out.join("coverage.csv"), text)?;
            Ok(())
        }
    }
}
