use std::path::PathBuf;

use potcast::bayes::{
    credible_interval, sample_posterior_with, PosteriorChain, PriorSpec, SamplerOptions, ScalePrior, ShapePrior,
    DEFAULT_CHAIN_LENGTH,
};
use potcast::estimators::{endpoint_estimate, extract_excesses, fit_gpwm, fit_mle, ExcessData, FitResult, Method};
use serde::Serialize;

use crate::config::{ConfigFile, Theta};
use crate::error::{CliError, CliResult};
use crate::input::read_sample;
use crate::{ForecastArgs, RunArgs};

const RUN_KEYS: &[&str] = &[
    "data",
    "k",
    "alpha",
    "methods",
    "chain-length",
    "burn-in",
    "thin",
    "seed",
    "out",
    "c",
    "p",
    "grid-points",
    "theta",
    "threshold",
    "n",
];

/// Injected parameters that bypass fitting.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Injected {
    pub theta: Theta,
    pub threshold: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub data: Option<PathBuf>,
    pub k: usize,
    pub c_list: Vec<f64>,
    pub p_list: Vec<f64>,
    pub alpha: f64,
    pub methods: Vec<Method>,
    pub chain_length: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub seed: u64,
    pub grid_points: usize,
    pub out: PathBuf,
    pub injected: Option<Injected>,
}

impl RunConfig {
    pub fn resolve(args: &RunArgs, forecast: Option<&ForecastArgs>) -> CliResult<Self> {
        let cfg = ConfigFile::load(args.config.as_deref(), RUN_KEYS)?;
        let k = cfg
            .value("k", args.k)?
            .ok_or_else(|| CliError::Usage("--k is required".into()))?;
        if k < 2 {
            return Err(CliError::Usage(format!("k must be at least 2, got {k}")));
        }
        let alpha = cfg.value("alpha", args.alpha)?.unwrap_or(0.05);
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(CliError::Usage(format!("alpha must lie in (0, 1), got {alpha}")));
        }
        let mut methods = cfg
            .list("methods", &args.methods)?
            .unwrap_or_else(|| vec![Method::Ml, Method::Gpwm, Method::Bayes]);
        methods.sort();
        methods.dedup();
        if methods.is_empty() {
            return Err(CliError::Usage("at least one method is required".into()));
        }
        let chain_length = cfg
            .value("chain-length", args.chain_length)?
            .unwrap_or(DEFAULT_CHAIN_LENGTH);
        if chain_length < 100 {
            return Err(CliError::Usage(format!(
                "chain length must be at least 100, got {chain_length}"
            )));
        }
        let burn_in = cfg.value("burn-in", args.burn_in)?.unwrap_or(chain_length / 5);
        let thin = cfg.value("thin", args.thin)?.unwrap_or(1);
        if thin == 0 {
            return Err(CliError::Usage("thin must be at least 1".into()));
        }
        let seed = cfg.value("seed", args.seed)?.unwrap_or(1);
        let out = cfg
            .value("out", args.out.clone())?
            .unwrap_or_else(|| PathBuf::from("."));
        let data = cfg.value("data", args.data.clone())?;

        let empty: &[f64] = &[];
        let (c_flag, p_flag) = forecast.map_or((empty, empty), |f| (f.c.as_slice(), f.p.as_slice()));
        let c_list = cfg.list("c", c_flag)?.unwrap_or_else(|| vec![2.0, 3.0, 4.0]);
        if let Some(bad) = c_list.iter().find(|c| !(**c >= 1.0) || !c.is_finite()) {
            return Err(CliError::Usage(format!("scaling factors must be >= 1, got {bad}")));
        }
        let p_list = cfg.list("p", p_flag)?.unwrap_or_default();
        let grid_points = cfg
            .value("grid-points", forecast.and_then(|f| f.grid_points))?
            .unwrap_or(512);
        if grid_points < 2 {
            return Err(CliError::Usage(format!(
                "grid points must be at least 2, got {grid_points}"
            )));
        }
        let theta = cfg.value("theta", forecast.and_then(|f| f.theta))?;
        let threshold = cfg.value("threshold", forecast.and_then(|f| f.threshold))?;
        let n = cfg.value("n", forecast.and_then(|f| f.n))?;
        let injected = match (theta, threshold, n) {
            (None, None, None) => None,
            (Some(theta), Some(threshold), Some(n)) => Some(Injected { theta, threshold, n }),
            _ => {
                return Err(CliError::Usage(
                    "--theta, --threshold and --n must be given together".into(),
                ));
            }
        };
        if injected.is_none() && data.is_none() {
            return Err(CliError::Usage(
                "--data is required (or --theta/--threshold/--n in test mode)".into(),
            ));
        }
        Ok(Self {
            data,
            k,
            c_list,
            p_list,
            alpha,
            methods,
            chain_length,
            burn_in,
            thin,
            seed,
            grid_points,
            out,
            injected,
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DataSummary {
    pub path: Option<String>,
    pub n: usize,
    pub k: usize,
    pub header: bool,
    pub dropped_rows: usize,
    pub threshold: f64,
}

/// Reads the data file and extracts the `k` excesses.
pub fn load_excesses(cfg: &RunConfig) -> CliResult<(ExcessData, DataSummary)> {
    let path = cfg
        .data
        .as_ref()
        .ok_or_else(|| CliError::Usage("--data is required".into()))?;
    let sample = read_sample(path)?;
    let n = sample.values.len();
    if n < cfg.k + 1 {
        return Err(CliError::Input(format!(
            "need at least k+1 = {} numeric values, found {n} in {} ({} rows dropped)",
            cfg.k + 1,
            path.display(),
            sample.dropped
        )));
    }
    let data = extract_excesses(&sample.values, cfg.k)?;
    let summary = DataSummary {
        path: Some(path.display().to_string()),
        n,
        k: cfg.k,
        header: sample.header,
        dropped_rows: sample.dropped,
        threshold: data.threshold(),
    };
    Ok((data, summary))
}

#[derive(Debug, Clone, Serialize)]
pub struct Settings {
    pub alpha: f64,
    pub seed: u64,
    pub chain_length: usize,
    pub burn_in: usize,
    pub thin: usize,
}

impl Settings {
    pub fn from(cfg: &RunConfig) -> Self {
        Self {
            alpha: cfg.alpha,
            seed: cfg.seed,
            chain_length: cfg.chain_length,
            burn_in: cfg.burn_in,
            thin: cfg.thin,
        }
    }
}

pub enum Fitted {
    Point(FitResult),
    Posterior { chain: PosteriorChain, prior: PriorSpec },
}

pub struct MethodFit {
    pub method: Method,
    pub outcome: Result<Fitted, String>,
}

pub fn fit_methods(data: &ExcessData, cfg: &RunConfig) -> Vec<MethodFit> {
    cfg.methods
        .iter()
        .map(|&method| {
            let outcome = match method {
                Method::Ml => fit_mle(data).map(Fitted::Point),
                Method::Gpwm => fit_gpwm(data).map(Fitted::Point),
                Method::Bayes => PriorSpec::default_for(data).and_then(|prior| {
                    let opts = SamplerOptions {
                        draws: cfg.chain_length,
                        burn_in: cfg.burn_in,
                        thin: cfg.thin,
                        seed: cfg.seed,
                        start: None,
                    };
                    sample_posterior_with(data, &prior, &opts).map(|chain| Fitted::Posterior { chain, prior })
                }),
            };
            MethodFit {
                method,
                outcome: outcome.map_err(|e| e.to_string()),
            }
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct PriorSummary {
    pub shape: &'static str,
    pub shape_mean: Option<f64>,
    pub shape_sd: Option<f64>,
    pub scale: &'static str,
    pub scale_anchor: Option<f64>,
    pub scale_lower: Option<f64>,
    pub scale_upper: Option<f64>,
}

impl PriorSummary {
    fn from(prior: &PriorSpec) -> Self {
        let (shape, shape_mean, shape_sd) = match prior.shape {
            ShapePrior::TruncatedGaussian { mean, sd } => ("truncated_gaussian", Some(mean), Some(sd)),
            ShapePrior::Flat => ("flat", None, None),
        };
        let (scale, scale_anchor, scale_lower, scale_upper) = match prior.scale {
            ScalePrior::DataDependent { anchor } => ("data_dependent", Some(anchor), None, None),
            ScalePrior::LogFlat { lower, upper } => ("log_flat", None, Some(lower), Some(upper)),
        };
        Self {
            shape,
            shape_mean,
            shape_sd,
            scale,
            scale_anchor,
            scale_lower,
            scale_upper,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PosteriorSummary {
    pub draws: usize,
    pub burn_in: usize,
    pub acceptance_rate: f64,
    pub prior: PriorSummary,
    pub sigma_ci: [f64; 2],
    pub gamma_ci: [f64; 2],
    pub endpoint_ci: [f64; 2],
    pub chain_file: String,
}

/// Per-method entry of `fit.json` (and of the `fits` list in `forecast.json`).
#[derive(Debug, Clone, Serialize)]
pub struct MethodEntry {
    pub method: String,
    pub status: &'static str,
    pub error: Option<String>,
    /// Point estimate, or posterior mean for `bayes`.
    pub sigma: Option<f64>,
    pub gamma: Option<f64>,
    pub validity: Option<&'static str>,
    pub converged: Option<bool>,
    pub iterations: Option<usize>,
    pub loglik: Option<f64>,
    /// Estimated right endpoint (null when infinite).
    pub endpoint: Option<f64>,
    pub posterior: Option<PosteriorSummary>,
}

impl MethodEntry {
    pub fn failed(method: &str, error: String) -> Self {
        Self {
            method: method.to_string(),
            status: "error",
            error: Some(error),
            sigma: None,
            gamma: None,
            validity: None,
            converged: None,
            iterations: None,
            loglik: None,
            endpoint: None,
            posterior: None,
        }
    }

    pub fn point(method: &str, fit: &FitResult, threshold: f64) -> Self {
        let endpoint = fit.params().ok().map(|p| endpoint_estimate(&p, threshold));
        Self {
            method: method.to_string(),
            status: "ok",
            error: None,
            sigma: Some(fit.sigma),
            gamma: Some(fit.gamma),
            validity: Some(fit.validity.label()),
            converged: Some(fit.converged),
            iterations: Some(fit.iterations),
            loglik: fit.loglik,
            endpoint,
            posterior: None,
        }
    }

    pub fn posterior(
        chain: &PosteriorChain,
        prior: &PriorSpec,
        threshold: f64,
        level: f64,
        chain_file: String,
    ) -> CliResult<Self> {
        let (sigma, gamma) = chain.mean();
        let endpoints = chain.transformed(|p| endpoint_estimate(p, threshold));
        let endpoint_mean = potcast::stats::mean(&endpoints);
        let ci = |f: &dyn Fn(&potcast::gpd::GpParams) -> f64| -> CliResult<[f64; 2]> {
            let c = credible_interval(chain, f, level)?;
            Ok([c.lower, c.upper])
        };
        Ok(Self {
            method: Method::Bayes.label().to_string(),
            status: "ok",
            error: None,
            sigma: Some(sigma),
            gamma: Some(gamma),
            validity: None,
            converged: None,
            iterations: None,
            loglik: None,
            endpoint: Some(endpoint_mean),
            posterior: Some(PosteriorSummary {
                draws: chain.len(),
                burn_in: chain.burn_in(),
                acceptance_rate: chain.acceptance_rate(),
                prior: PriorSummary::from(prior),
                sigma_ci: ci(&|p| p.sigma())?,
                gamma_ci: ci(&|p| p.gamma())?,
                endpoint_ci: ci(&|p| endpoint_estimate(p, threshold))?,
                chain_file,
            }),
        })
    }
}

/// Writes a posterior chain next to the other artifacts.
pub fn write_chain(cfg: &RunConfig, chain: &PosteriorChain) -> CliResult<String> {
    let name = "chain_bayes.csv".to_string();
    let file = std::fs::File::create(cfg.out.join(&name))?;
    chain.write_csv(std::io::BufWriter::new(file))?;
    Ok(name)
}

/// Entries for every method, writing chains as a side effect.
pub fn method_entries(fits: &[MethodFit], cfg: &RunConfig, threshold: f64) -> CliResult<Vec<MethodEntry>> {
    fits.iter()
        .map(|f| {
            let label = f.method.label();
            Ok(match &f.outcome {
                Err(e) => MethodEntry::failed(label, e.clone()),
                Ok(Fitted::Point(fit)) => MethodEntry::point(label, fit, threshold),
                Ok(Fitted::Posterior { chain, prior }) => {
                    let file = write_chain(cfg, chain)?;
                    MethodEntry::posterior(chain, prior, threshold, 1.0 - cfg.alpha, file)?
                }
            })
        })
        .collect()
}
