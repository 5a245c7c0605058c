use rand::Rng;
use rayon::prelude::*;

use crate::bayes::{sample_posterior_with, PriorSpec, SamplerOptions};
use crate::error::{Error, Result};
use crate::estimators::{extract_excesses, fit_gpwm, fit_mle, Method};
use crate::predictive::{extreme_level, posterior_level, predictive_interval, Kind, Level, PredictiveSpec};
use crate::rng;
use crate::stats::NeumaierSum;

use super::DistributionOracle;

/// Largest tolerated share of failed replicates.
pub const MAX_FAILURE_SHARE: f64 = 0.10;

#[derive(Debug, Clone, PartialEq)]
pub struct CoverageSettings {
    pub oracle: DistributionOracle,
    pub n: usize,
    pub k: usize,
    pub level: Level,
    pub alpha: f64,
    pub method: Method,
    pub replicates: usize,
    pub seed: u64,
    /// Retained posterior draws per replicate (Bayes only).
    pub chain_length: usize,
    /// Burn-in per replicate; `chain_length / 5` when `None`.
    pub burn_in: Option<usize>,
}

impl CoverageSettings {
    pub fn new(oracle: DistributionOracle, n: usize, k: usize, method: Method) -> Self {
        Self {
            oracle,
            n,
            k,
            level: Level::Probability(k as f64 / n as f64),
            alpha: 0.05,
            method,
            replicates: 500,
            seed: 1,
            chain_length: 2000,
            burn_in: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoverageReport {
    pub oracle: String,
    pub n: usize,
    pub k: usize,
    pub level: Level,
    pub method: Method,
    /// Replicates that entered the average.
    pub replicates: usize,
    /// Replicates excluded because the fit failed.
    pub failures: usize,
    /// `1 - alpha`.
    pub nominal: f64,
    pub empirical: f64,
    /// `sqrt(empirical (1 - empirical) / replicates)`.
    pub mc_stderr: f64,
}

impl CoverageReport {
    /// `|empirical - nominal|`.
    pub fn deviation(&self) -> f64 {
        (self.empirical - self.nominal).abs()
    }
}

/// Predictive spec from one replicate's fit; `None` when the fit is unusable.
fn replicate_spec(s: &CoverageSettings, sample: &[f64], chain_seed: u64) -> Option<PredictiveSpec> {
    let data = extract_excesses(sample, s.k).ok()?;
    let (t, k, n) = (data.threshold(), data.k(), data.n());
    let point = |fit: crate::estimators::FitResult| -> Option<PredictiveSpec> {
        if !fit.usable() {
            return None;
        }
        let theta = fit.params().ok()?;
        let p = match s.level {
            Level::Probability(p) => p,
            Level::Scaling(c) => extreme_level(c, theta.gamma(), k, n).ok()?,
        };
        PredictiveSpec::plug_in(&theta, t, k, n, p).ok()
    };
    match s.method {
        Method::Ml => point(fit_mle(&data).ok()?),
        Method::Gpwm => point(fit_gpwm(&data).ok()?),
        Method::Bayes => {
            let prior = PriorSpec::default_for(&data).ok()?;
            let opts = SamplerOptions {
                draws: s.chain_length,
                burn_in: s.burn_in.unwrap_or(s.chain_length / 5),
                thin: 1,
                seed: chain_seed,
                start: None,
            };
            let chain = sample_posterior_with(&data, &prior, &opts).ok()?;
            let p = match s.level {
                Level::Probability(p) => p,
                Level::Scaling(c) => posterior_level(chain.draws(), c, k, n).ok()?.mean,
            };
            PredictiveSpec::posterior(chain.draws(), t, k, n, p).ok()
        }
    }
}

/// True conditional coverage `P(X in [lower, upper] | X > Q(p))` of one
/// replicate's peak interval, with `Q(p)` the oracle's quantile at the level
/// the interval targets.
fn replicate_coverage(s: &CoverageSettings, index: u64) -> Option<f64> {
    let mut rng = rng::stream(s.seed, index);
    let sample = s.oracle.sample_rng(s.n, &mut rng);
    let chain_seed: u64 = rng.random();
    let spec = replicate_spec(s, &sample, chain_seed)?;
    let pi = predictive_interval(&spec, s.alpha, Kind::Peak).ok()?;
    let q = s.oracle.upper_quantile(spec.p()).ok()?;
    let tail = s.oracle.survival(q);
    if !(tail > 0.0) {
        return None;
    }
    let inside = s.oracle.survival(pi.lower.max(q)) - s.oracle.survival(pi.upper.max(q));
    Some((inside / tail).clamp(0.0, 1.0))
}

/// Monte Carlo estimate of the true coverage of the peak predictive interval.
///
/// Replicate `i` draws from stream `i` of the master seed, so the report does
/// not depend on how replicates are scheduled across threads.
pub fn simulate_coverage(settings: &CoverageSettings) -> Result<CoverageReport> {
    let s = settings;
    if s.replicates < 100 {
        return Err(Error::Domain(format!(
            "coverage needs at least 100 replicates, got {}",
            s.replicates
        )));
    }
    if !(s.alpha > 0.0 && s.alpha < 1.0) {
        return Err(Error::Domain(format!("alpha must lie in (0, 1), got {}", s.alpha)));
    }
    if s.k < 2 || s.k >= s.n {
        return Err(Error::Domain(format!("need 2 <= k < n, got k={}, n={}", s.k, s.n)));
    }
    if let Level::Scaling(c) = s.level {
        if !(c >= 1.0) {
            return Err(Error::Domain(format!("scaling factor must be >= 1, got {c}")));
        }
    }
    if let Level::Probability(p) = s.level {
        if !(p > 0.0 && p <= s.k as f64 / s.n as f64) {
            return Err(Error::Domain(format!("level p must lie in (0, k/n], got {p}")));
        }
    }
    let results: Vec<Option<f64>> = (0..s.replicates as u64)
        .into_par_iter()
        .map(|i| replicate_coverage(s, i))
        .collect();
    let failures = results.iter().filter(|r| r.is_none()).count();
    if failures as f64 > MAX_FAILURE_SHARE * s.replicates as f64 {
        return Err(Error::Experiment(format!(
            "{failures} of {} replicates failed to produce an interval",
            s.replicates
        )));
    }
    let used = s.replicates - failures;
    let empirical = results.iter().flatten().copied().collect::<NeumaierSum>().sum() / used as f64;
    Ok(CoverageReport {
        oracle: s.oracle.name(),
        n: s.n,
        k: s.k,
        level: s.level,
        method: s.method,
        replicates: used,
        failures,
        nominal: 1.0 - s.alpha,
        empirical,
        mc_stderr: (empirical * (1.0 - empirical) / used as f64).sqrt(),
    })
}
