//! Bayesian GP fits: priors, an adaptive random-walk Metropolis sampler and
//! posterior summaries.
//!
//! Priors are densities of `(log sigma, gamma)`, the coordinates the sampler
//! moves in. The scale prior `DataDependent { anchor }` is a Cauchy law on
//! `log sigma` centred at `log anchor`; in `sigma` coordinates its density is
//!
//! ```text
//! pi_sc(sigma) = 1 / (pi sigma (1 + log(sigma / anchor)^2)),
//! ```
//!
//! so `sigma * pi_sc(sigma) <= 1/pi`. `LogFlat` is uniform in `log sigma`,
//! i.e. proportional to `1/sigma` on `[lower, upper]`. The shape prior is a
//! Gaussian truncated to `gamma > -1/2`, or flat on the same half-line.

use std::io::Write;

use rand::Rng;
use rand_distr::{Distribution, Open01, StandardNormal};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};
use crate::estimators::{fit_gpwm, fit_mle, ExcessData};
use crate::gpd::{gp_log_density, GpParams, GAMMA_LOWER};
use crate::rng;
use crate::stats::{mean, quantile_sorted, NeumaierSum};

/// Chain length used when none is given.
pub const DEFAULT_CHAIN_LENGTH: usize = 20_000;

/// Acceptance rate the burn-in adaptation aims for.
pub const TARGET_ACCEPTANCE: f64 = 0.234;

const LN_PI: f64 = 1.144_729_885_849_400_2;
const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ShapePrior {
    /// `N(mean, sd^2)` restricted to `gamma > -1/2` and renormalized.
    TruncatedGaussian { mean: f64, sd: f64 },
    /// Improper uniform density on `gamma > -1/2`.
    Flat,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScalePrior {
    /// Cauchy on `log sigma` centred at `log anchor`.
    DataDependent { anchor: f64 },
    /// Uniform on `log sigma` over `[lower, upper]`; improper when a bound is
    /// `0` or `inf`.
    LogFlat { lower: f64, upper: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PriorSpec {
    pub shape: ShapePrior,
    pub scale: ScalePrior,
}

impl PriorSpec {
    /// `N(0, 10^2)` shape prior truncated to `gamma > -1/2`, scale prior
    /// anchored at the GPWM scale (ML scale, then mean excess, as fallbacks).
    pub fn default_for(data: &ExcessData) -> Result<Self> {
        let anchor = fit_gpwm(data)
            .ok()
            .filter(|f| f.is_valid())
            .map(|f| f.sigma)
            .or_else(|| fit_mle(data).ok().filter(|f| f.usable()).map(|f| f.sigma))
            .unwrap_or_else(|| data.mean_excess());
        if !(anchor.is_finite() && anchor > 0.0) {
            return Err(Error::Degenerate("no positive scale to anchor the prior".into()));
        }
        Ok(Self {
            shape: ShapePrior::TruncatedGaussian { mean: 0.0, sd: 10.0 },
            scale: ScalePrior::DataDependent { anchor },
        })
    }

    /// Flat in `(log sigma, gamma)` over the whole parameter space.
    pub fn flat() -> Self {
        Self {
            shape: ShapePrior::Flat,
            scale: ScalePrior::LogFlat {
                lower: 0.0,
                upper: f64::INFINITY,
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.shape {
            ShapePrior::TruncatedGaussian { mean, sd } => {
                if !(mean.is_finite() && sd.is_finite() && sd > 0.0) {
                    return Err(Error::Domain(format!("invalid shape prior N({mean}, {sd}^2)")));
                }
            }
            ShapePrior::Flat => {}
        }
        match self.scale {
            ScalePrior::DataDependent { anchor } => {
                if !(anchor.is_finite() && anchor > 0.0) {
                    return Err(Error::Domain(format!(
                        "scale prior anchor must be positive, got {anchor}"
                    )));
                }
            }
            ScalePrior::LogFlat { lower, upper } => {
                if !(lower >= 0.0 && upper > lower) {
                    return Err(Error::Domain(format!("invalid scale prior bounds [{lower}, {upper}]")));
                }
            }
        }
        Ok(())
    }
}

/// Log shape prior density; `-inf` for `gamma <= -1/2`.
pub fn log_shape_prior(gamma: f64, prior: &ShapePrior) -> f64 {
    if !(gamma > GAMMA_LOWER) || !gamma.is_finite() {
        return f64::NEG_INFINITY;
    }
    match *prior {
        ShapePrior::Flat => 0.0,
        ShapePrior::TruncatedGaussian { mean, sd } => {
            let z = (gamma - mean) / sd;
            let mass = 0.5 * erfc((GAMMA_LOWER - mean) / (sd * std::f64::consts::SQRT_2));
            -0.5 * z * z - LN_SQRT_2PI - sd.ln() - mass.ln()
        }
    }
}

/// Log density of the scale prior with respect to `d log sigma`.
pub fn log_scale_prior(sigma: f64, prior: &ScalePrior) -> f64 {
    if !(sigma > 0.0) || !sigma.is_finite() {
        return f64::NEG_INFINITY;
    }
    match *prior {
        ScalePrior::DataDependent { anchor } => {
            let u = (sigma / anchor).ln();
            -LN_PI - u.mul_add(u, 1.0).ln()
        }
        ScalePrior::LogFlat { lower, upper } => {
            if sigma < lower || sigma > upper {
                f64::NEG_INFINITY
            } else if lower > 0.0 && upper.is_finite() {
                -(upper / lower).ln().ln()
            } else {
                0.0
            }
        }
    }
}

/// `log pi_sh(gamma) + log pi_sc(sigma)` in `(log sigma, gamma)` coordinates.
pub fn log_prior(params: &GpParams, prior: &PriorSpec) -> f64 {
    log_shape_prior(params.gamma(), &prior.shape) + log_scale_prior(params.sigma(), &prior.scale)
}

/// Log-likelihood plus log prior.
pub fn log_posterior_unnorm(params: &GpParams, data: &ExcessData, prior: &PriorSpec) -> f64 {
    let lp = log_prior(params, prior);
    if lp == f64::NEG_INFINITY {
        return lp;
    }
    let mut ll = NeumaierSum::default();
    for &x in data.excesses() {
        let l = gp_log_density(x, params);
        if l == f64::NEG_INFINITY {
            return l;
        }
        ll.add(l);
    }
    ll.sum() + lp
}

fn log_post_coords(data: &ExcessData, prior: &PriorSpec, point: [f64; 2]) -> f64 {
    match GpParams::new(point[0].exp(), point[1]) {
        Ok(p) => log_posterior_unnorm(&p, data, prior),
        Err(_) => f64::NEG_INFINITY,
    }
}

/// Metropolis acceptance for a symmetric proposal with log target ratio
/// `log_ratio`.
pub fn metropolis_accept<R: Rng + ?Sized>(log_ratio: f64, rng: &mut R) -> bool {
    if log_ratio.is_nan() {
        return false;
    }
    let u: f64 = Open01.sample(rng);
    u.ln() < log_ratio
}

/// Sampler settings.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplerOptions {
    /// Retained draws `M`.
    pub draws: usize,
    pub burn_in: usize,
    /// Keep every `thin`-th state after burn-in.
    pub thin: usize,
    pub seed: u64,
    /// Starting point; ML (then GPWM) estimate when `None`.
    pub start: Option<GpParams>,
}

impl SamplerOptions {
    /// `draws` retained states, burn-in `draws/5`, no thinning.
    pub fn new(draws: usize, seed: u64) -> Self {
        Self {
            draws,
            burn_in: draws / 5,
            thin: 1,
            seed,
            start: None,
        }
    }
}

/// Posterior draws with their log posterior values.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorChain {
    draws: Vec<GpParams>,
    log_posts: Vec<f64>,
    acceptance_rate: f64,
    burn_in: usize,
    seed: u64,
}

impl PosteriorChain {
    pub fn draws(&self) -> &[GpParams] {
        &self.draws
    }

    pub fn log_posts(&self) -> &[f64] {
        &self.log_posts
    }

    /// Acceptance rate of the retained (post burn-in) iterations.
    pub fn acceptance_rate(&self) -> f64 {
        self.acceptance_rate
    }

    pub fn burn_in(&self) -> usize {
        self.burn_in
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn len(&self) -> usize {
        self.draws.len()
    }

    pub fn is_empty(&self) -> bool {
        self.draws.is_empty()
    }

    /// Posterior mean of `(sigma, gamma)`.
    pub fn mean(&self) -> (f64, f64) {
        let s: Vec<f64> = self.draws.iter().map(|d| d.sigma()).collect();
        let g: Vec<f64> = self.draws.iter().map(|d| d.gamma()).collect();
        (mean(&s), mean(&g))
    }

    /// Draw with the highest log posterior.
    pub fn mode(&self) -> GpParams {
        let mut best = 0;
        for (i, lp) in self.log_posts.iter().enumerate() {
            if *lp > self.log_posts[best] {
                best = i;
            }
        }
        self.draws[best]
    }

    /// Values of `transform` over the draws.
    pub fn transformed<F: Fn(&GpParams) -> f64>(&self, transform: F) -> Vec<f64> {
        self.draws.iter().map(transform).collect()
    }

    /// Writes the chain as CSV with header `sigma,gamma,log_post`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "sigma,gamma,log_post")?;
        for (d, lp) in self.draws.iter().zip(&self.log_posts) {
            writeln!(out, "{:e},{:e},{:e}", d.sigma(), d.gamma(), lp)?;
        }
        Ok(())
    }
}

/// Posterior sample of length `draws` with the given burn-in, no thinning.
pub fn sample_posterior(
    data: &ExcessData,
    prior: &PriorSpec,
    draws: usize,
    burn_in: usize,
    seed: u64,
) -> Result<PosteriorChain> {
    let opts = SamplerOptions {
        draws,
        burn_in,
        thin: 1,
        seed,
        start: None,
    };
    sample_posterior_with(data, prior, &opts)
}

fn default_start(data: &ExcessData, prior: &PriorSpec) -> Option<[f64; 2]> {
    let mut candidates = Vec::new();
    if let Ok(f) = fit_mle(data) {
        if f.usable() {
            candidates.push([f.sigma.ln(), f.gamma]);
        }
    }
    if let Ok(f) = fit_gpwm(data) {
        if f.is_valid() {
            candidates.push([f.sigma.ln(), f.gamma]);
        }
    }
    candidates.push([data.mean_excess().ln(), 0.1]);
    candidates
        .into_iter()
        .find(|c| log_post_coords(data, prior, *c).is_finite())
}

/// Lower Cholesky factor of a 2x2 covariance (with a small ridge).
fn cholesky(cov: [[f64; 2]; 2]) -> Option<[[f64; 2]; 2]> {
    let ridge = 1e-12 * (cov[0][0] + cov[1][1]);
    let a = cov[0][0] + ridge;
    let c = cov[1][1] + ridge;
    if !(a > 0.0) {
        return None;
    }
    let l00 = a.sqrt();
    let l10 = cov[1][0] / l00;
    let d = c - l10 * l10;
    if !(d > 0.0) || !d.is_finite() {
        return None;
    }
    Some([[l00, 0.0], [l10, d.sqrt()]])
}

fn scaled(cov: [[f64; 2]; 2], factor: f64) -> [[f64; 2]; 2] {
    [
        [cov[0][0] * factor, cov[0][1] * factor],
        [cov[1][0] * factor, cov[1][1] * factor],
    ]
}

/// Running mean and covariance (Welford).
#[derive(Default)]
struct RunningCov {
    n: f64,
    mean: [f64; 2],
    m2: [[f64; 2]; 2],
}

impl RunningCov {
    fn push(&mut self, x: [f64; 2]) {
        self.n += 1.0;
        let d = [x[0] - self.mean[0], x[1] - self.mean[1]];
        self.mean[0] += d[0] / self.n;
        self.mean[1] += d[1] / self.n;
        let d2 = [x[0] - self.mean[0], x[1] - self.mean[1]];
        for (row, di) in self.m2.iter_mut().zip(d) {
            for (m, dj) in row.iter_mut().zip(d2) {
                *m += di * dj;
            }
        }
    }

    fn cov(&self) -> [[f64; 2]; 2] {
        scaled(self.m2, 1.0 / (self.n - 1.0))
    }
}

/// Adaptive Gaussian random-walk Metropolis on `(log sigma, gamma)`.
///
/// During burn-in the proposal covariance tracks the empirical covariance
/// of the chain (scaled by `2.38^2/2`) and a Robbins-Monro factor steers the
/// acceptance rate towards 0.234. The proposal is frozen afterwards.
pub fn sample_posterior_with(data: &ExcessData, prior: &PriorSpec, opts: &SamplerOptions) -> Result<PosteriorChain> {
    if opts.draws < 100 {
        return Err(Error::Domain(format!(
            "chain length must be at least 100, got {}",
            opts.draws
        )));
    }
    if opts.thin == 0 {
        return Err(Error::Domain("thinning interval must be at least 1".into()));
    }
    prior.validate()?;
    let start = match opts.start {
        Some(p) => Some([p.sigma().ln(), p.gamma()]),
        None => default_start(data, prior),
    };
    let Some(mut point) = start else {
        return Err(Error::Degenerate(
            "no starting point with finite posterior density".into(),
        ));
    };
    let mut lp = log_post_coords(data, prior, point);
    if !lp.is_finite() {
        return Err(Error::Domain("starting point has zero posterior density".into()));
    }

    let mut rng = rng::seeded(opts.seed);
    let step = 1.0 / (data.k() as f64).sqrt();
    let base = [[step * step, 0.0], [0.0, step * step]];
    let mut proposal = cholesky(base).expect("diagonal covariance");
    let mut log_scale = 0.0_f64;
    let mut running = RunningCov::default();
    running.push(point);

    let propose = |rng: &mut rng::StreamRng, point: [f64; 2], l: &[[f64; 2]; 2]| {
        let z0: f64 = StandardNormal.sample(rng);
        let z1: f64 = StandardNormal.sample(rng);
        [point[0] + l[0][0] * z0, point[1] + l[1][0] * z0 + l[1][1] * z1]
    };

    for i in 0..opts.burn_in {
        let trial = propose(&mut rng, point, &proposal);
        let trial_lp = log_post_coords(data, prior, trial);
        let log_ratio = trial_lp - lp;
        if metropolis_accept(log_ratio, &mut rng) {
            point = trial;
            lp = trial_lp;
        }
        running.push(point);
        let accept_prob = if log_ratio.is_nan() {
            0.0
        } else {
            log_ratio.min(0.0).exp()
        };
        log_scale += (accept_prob - TARGET_ACCEPTANCE) / ((i + 1) as f64).powf(0.6);
        log_scale = log_scale.clamp(-20.0, 20.0);
        let cov = if running.n >= 50.0 {
            scaled(running.cov(), 2.38 * 2.38 / 2.0)
        } else {
            base
        };
        if let Some(l) = cholesky(scaled(cov, log_scale.exp())) {
            proposal = l;
        }
    }

    let mut draws = Vec::with_capacity(opts.draws);
    let mut log_posts = Vec::with_capacity(opts.draws);
    let iterations = opts.draws * opts.thin;
    let mut accepted = 0usize;
    for i in 0..iterations {
        let trial = propose(&mut rng, point, &proposal);
        let trial_lp = log_post_coords(data, prior, trial);
        if metropolis_accept(trial_lp - lp, &mut rng) {
            point = trial;
            lp = trial_lp;
            accepted += 1;
        }
        if (i + 1) % opts.thin == 0 {
            draws.push(GpParams::new(point[0].exp(), point[1]).expect("chain stays in the parameter space"));
            log_posts.push(lp);
        }
    }
    let rate = accepted as f64 / iterations as f64;
    if !(0.01..=0.99).contains(&rate) {
        return Err(Error::ChainDegenerate { rate });
    }
    Ok(PosteriorChain {
        draws,
        log_posts,
        acceptance_rate: rate,
        burn_in: opts.burn_in,
        seed: opts.seed,
    })
}

/// Equal-tailed interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CredibleInterval {
    pub lower: f64,
    pub upper: f64,
    pub level: f64,
}

/// Equal-tailed credible interval of `values` from linearly interpolated
/// empirical quantiles at `(1 - level)/2` and `(1 + level)/2`. NaN values are
/// ignored.
pub fn credible_interval_of(values: &[f64], level: f64) -> Result<CredibleInterval> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::Domain(format!("credible level must lie in (0, 1), got {level}")));
    }
    let mut v: Vec<f64> = values.iter().copied().filter(|x| !x.is_nan()).collect();
    if v.is_empty() {
        return Err(Error::Input("no values to summarize".into()));
    }
    v.sort_by(f64::total_cmp);
    let tail = 0.5 * (1.0 - level);
    Ok(CredibleInterval {
        lower: quantile_sorted(&v, tail),
        upper: quantile_sorted(&v, 1.0 - tail),
        level,
    })
}

/// Credible interval of a transformed parameter.
pub fn credible_interval<F: Fn(&GpParams) -> f64>(
    chain: &PosteriorChain,
    transform: F,
    level: f64,
) -> Result<CredibleInterval> {
    credible_interval_of(&chain.transformed(transform), level)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gpd::gp_sample;

    fn data(sigma: f64, gamma: f64, k: usize, seed: u64) -> ExcessData {
        let p = GpParams::new(sigma, gamma).unwrap();
        ExcessData::from_excesses(10 * k, 0.0, gp_sample(&p, k, seed).unwrap()).unwrap()
    }

    #[test]
    fn flat_prior_is_constant() {
        let prior = PriorSpec::flat();
        let a = log_prior(&GpParams::new(0.3, -0.2).unwrap(), &prior);
        let b = log_prior(&GpParams::new(7.0, 1.5).unwrap(), &prior);
        assert_eq!(a, b);
        assert_eq!(log_shape_prior(-0.6, &ShapePrior::Flat), f64::NEG_INFINITY);
    }

    #[test]
    fn anchored_scale_prior_closed_form() {
        let prior = ScalePrior::DataDependent { anchor: 2.0 };
        let density = |s: f64| 1.0 / (std::f64::consts::PI * s * (1.0 + (s / 2.0).ln().powi(2)));
        for (s, t) in [(1.0, 3.0), (0.1, 50.0), (2.0, 2.5)] {
            // Log densities in log-sigma coordinates differ from sigma
            // coordinates by log sigma.
            let lhs = log_scale_prior(s, &prior) - log_scale_prior(t, &prior);
            let rhs = (s * density(s)).ln() - (t * density(t)).ln();
            assert!((lhs - rhs).abs() < 1e-12);
        }
    }

    #[test]
    fn truncated_gaussian_is_normalized() {
        let prior = ShapePrior::TruncatedGaussian { mean: 0.3, sd: 0.4 };
        let cfg = crate::quadrature::QuadConfig::default();
        let mass = crate::quadrature::integrate(|g| log_shape_prior(g, &prior).exp(), &[-0.5, f64::INFINITY], &cfg)
            .unwrap()
            .value;
        assert!((mass - 1.0).abs() < 1e-8, "{mass}");
    }

    #[test]
    fn posterior_with_flat_prior_is_loglik() {
        let d = data(1.0, 0.1, 50, 4);
        let prior = PriorSpec::flat();
        let a = GpParams::new(1.1, 0.2).unwrap();
        let b = GpParams::new(0.8, 0.0).unwrap();
        let diff = log_posterior_unnorm(&a, &d, &prior) - log_posterior_unnorm(&b, &d, &prior);
        let ll = crate::gpd::gp_loglik(&a, d.excesses()).unwrap() - crate::gpd::gp_loglik(&b, d.excesses()).unwrap();
        assert!((diff - ll).abs() < 1e-9);
        let outside = GpParams::new(0.1, -0.45).unwrap();
        assert_eq!(log_posterior_unnorm(&outside, &d, &prior), f64::NEG_INFINITY);
    }

    #[test]
    fn credible_interval_interpolates() {
        let v: Vec<f64> = (1..=100).map(f64::from).collect();
        let ci = credible_interval_of(&v, 0.9).unwrap();
        assert!((ci.lower - 5.95).abs() < 1e-12);
        assert!((ci.upper - 95.05).abs() < 1e-12);
        let c = credible_interval_of(&[2.5; 10], 0.95).unwrap();
        assert_eq!((c.lower, c.upper), (2.5, 2.5));
        assert!(credible_interval_of(&v, 1.0).is_err());
    }

    #[test]
    fn short_chains_are_rejected() {
        let d = data(1.0, 0.1, 50, 4);
        assert!(sample_posterior(&d, &PriorSpec::flat(), 99, 10, 1).is_err());
    }

    #[test]
    fn chain_csv_has_header_and_rows() {
        let d = data(1.0, 0.1, 200, 4);
        let chain = sample_posterior(&d, &PriorSpec::default_for(&d).unwrap(), 100, 50, 3).unwrap();
        let mut buf = Vec::new();
        chain.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("sigma,gamma,log_post"));
        assert_eq!(lines.count(), 100);
    }
}
