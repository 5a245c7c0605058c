//! Generalized Pareto distribution.
//!
//! The two-parameter family `H(x; sigma, gamma) = 1 - (1 + gamma x / sigma)^(-1/gamma)`
//! on `x > 0`, with the exponential law as the `gamma -> 0` limit. All
//! evaluations go through `log1p`/`expm1` forms and switch to short series
//! when `|gamma| < 1e-6`, so there is no branch discontinuity at zero.

use rand::Rng;
use rand_distr::{Distribution, Open01};

use crate::error::{Error, Result};
use crate::rng;

/// Lower bound of the admissible shape region `(-1/2, inf)`.
pub const GAMMA_LOWER: f64 = -0.5;

/// Below this `|gamma|` the series forms of the `gamma -> 0` limit are used.
pub const GAMMA_SWITCH: f64 = 1e-6;

/// Scale and shape of a generalized Pareto law.
///
/// Construction enforces `sigma > 0` and `gamma > -1/2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GpParams {
    sigma: f64,
    gamma: f64,
}

impl GpParams {
    pub fn new(sigma: f64, gamma: f64) -> Result<Self> {
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(Error::Domain(format!("scale must be positive and finite, got {sigma}")));
        }
        if !(gamma.is_finite() && gamma > GAMMA_LOWER) {
            return Err(Error::Domain(format!("shape must be finite and > -1/2, got {gamma}")));
        }
        Ok(Self { sigma, gamma })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Copy with a new scale and the same shape.
    pub fn with_sigma(&self, sigma: f64) -> Result<Self> {
        Self::new(sigma, self.gamma)
    }

    pub fn support(&self) -> SupportInterval {
        SupportInterval {
            lower: 0.0,
            upper: if self.gamma < 0.0 {
                -self.sigma / self.gamma
            } else {
                f64::INFINITY
            },
        }
    }
}

/// Support `(lower, upper)` of a GP excess; `upper` is infinite for `gamma >= 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupportInterval {
    pub lower: f64,
    pub upper: f64,
}

impl SupportInterval {
    pub fn is_bounded(&self) -> bool {
        self.upper.is_finite()
    }

    pub fn contains(&self, x: f64) -> bool {
        x > self.lower && x < self.upper
    }
}

/// `log1p(gamma * z) / gamma`, continuous through `gamma = 0` where it equals `z`.
pub fn log1p_ratio(gamma: f64, z: f64) -> f64 {
    let a = gamma * z;
    if gamma.abs() < GAMMA_SWITCH && a.abs() < 1e-3 {
        z * (1.0 - a * (0.5 - a * (1.0 / 3.0 - a * 0.25)))
    } else {
        (a).ln_1p() / gamma
    }
}

/// `expm1(gamma * y) / gamma`, continuous through `gamma = 0` where it equals `y`.
pub fn expm1_ratio(gamma: f64, y: f64) -> f64 {
    let b = gamma * y;
    if gamma.abs() < GAMMA_SWITCH && b.abs() < 1e-3 {
        y * (1.0 + b * (0.5 + b * (1.0 / 6.0 + b / 24.0)))
    } else {
        b.exp_m1() / gamma
    }
}

/// Log-density; `-inf` outside the support.
pub fn gp_log_density(x: f64, params: &GpParams) -> f64 {
    let (sigma, gamma) = (params.sigma, params.gamma);
    if x.is_nan() || x < 0.0 {
        return f64::NEG_INFINITY;
    }
    if gamma < 0.0 && x >= -sigma / gamma {
        return f64::NEG_INFINITY;
    }
    let z = x / sigma;
    -sigma.ln() - (1.0 + gamma) * log1p_ratio(gamma, z)
}

/// Density `h(x) = h_gamma(x / sigma) / sigma`.
///
/// Zero outside the support; `1/sigma` at `x = 0`; zero exactly at a finite
/// upper endpoint (the left limit for `gamma` in `(-1/2, 0)`).
pub fn gp_density(x: f64, params: &GpParams) -> f64 {
    gp_log_density(x, params).exp()
}

/// Survival function `1 - H(x)`.
pub fn gp_survival(x: f64, params: &GpParams) -> f64 {
    let (sigma, gamma) = (params.sigma, params.gamma);
    if x.is_nan() {
        return f64::NAN;
    }
    if x <= 0.0 {
        return 1.0;
    }
    if gamma < 0.0 && x >= -sigma / gamma {
        return 0.0;
    }
    (-log1p_ratio(gamma, x / sigma)).exp()
}

/// Distribution function `H(x)`.
pub fn gp_cdf(x: f64, params: &GpParams) -> f64 {
    let (sigma, gamma) = (params.sigma, params.gamma);
    if x.is_nan() {
        return f64::NAN;
    }
    if x <= 0.0 {
        return 0.0;
    }
    if gamma < 0.0 && x >= -sigma / gamma {
        return 1.0;
    }
    -(-log1p_ratio(gamma, x / sigma)).exp_m1()
}

/// Quantile `sigma ((1 - q)^(-gamma) - 1) / gamma` for `q` in `[0, 1)`.
pub fn gp_quantile(q: f64, params: &GpParams) -> Result<f64> {
    if !(0.0..1.0).contains(&q) {
        return Err(Error::Domain(format!("quantile level must lie in [0, 1), got {q}")));
    }
    let y = -(-q).ln_1p();
    Ok(params.sigma * expm1_ratio(params.gamma, y))
}

/// Quantile from an upper-tail probability `s = 1 - q`, accurate for tiny `s`.
pub(crate) fn gp_quantile_upper(s: f64, params: &GpParams) -> f64 {
    params.sigma * expm1_ratio(params.gamma, -s.ln())
}

/// `m` draws by inverse-CDF sampling from the given generator.
pub fn gp_sample_rng<R: Rng + ?Sized>(params: &GpParams, m: usize, rng: &mut R) -> Vec<f64> {
    (0..m)
        .map(|_| {
            let u: f64 = Open01.sample(rng);
            gp_quantile_upper(u, params)
        })
        .collect()
}

/// `m` i.i.d. draws, deterministic in `seed`.
pub fn gp_sample(params: &GpParams, m: usize, seed: u64) -> Result<Vec<f64>> {
    if m == 0 {
        return Err(Error::Domain("sample size must be at least 1".into()));
    }
    Ok(gp_sample_rng(params, m, &mut rng::seeded(seed)))
}

/// Log-likelihood of a set of excesses; `-inf` if any excess is outside the support.
pub fn gp_loglik(params: &GpParams, excesses: &[f64]) -> Result<f64> {
    if excesses.is_empty() {
        return Err(Error::Domain("log-likelihood needs at least one excess".into()));
    }
    if excesses.iter().any(|x| x.is_nan()) {
        return Err(Error::Input("excesses contain NaN".into()));
    }
    let mut total = 0.0;
    for &x in excesses {
        let l = gp_log_density(x, params);
        if l == f64::NEG_INFINITY {
            return Ok(f64::NEG_INFINITY);
        }
        total += l;
    }
    Ok(total)
}

/// Law of `Y - u | Y > u` for `Y ~ GP(sigma, gamma)`: `GP(sigma + gamma u, gamma)`.
pub fn threshold_stability_transform(params: &GpParams, u: f64) -> Result<GpParams> {
    if !(u.is_finite() && u >= 0.0) {
        return Err(Error::Domain(format!(
            "threshold shift must be finite and >= 0, got {u}"
        )));
    }
    let scale = params.sigma + params.gamma * u;
    if scale <= 0.0 || gp_survival(u, params) <= 0.0 {
        return Err(Error::Domain(format!(
            "threshold {u} is at or beyond the upper endpoint {}",
            params.support().upper
        )));
    }
    GpParams::new(scale, params.gamma)
}
