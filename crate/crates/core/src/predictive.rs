//! Predictive laws for future excesses and peaks.
//!
//! For an exceedance level `p <= k/n` the plug-in excess law is
//! `GP((np/k)^(-gamma) sigma, gamma)`, and the peak law is that law shifted to
//! start at the extreme quantile
//!
//! ```text
//! Q(p) = t + sigma ((np/k)^(-gamma) - 1) / gamma,
//! ```
//!
//! with the `gamma -> 0` limit `t + sigma log(k / (np))`. A posterior chain
//! gives the equally weighted mixture of the plug-in laws of its draws.

use crate::error::{Error, Result};
use crate::gpd::{expm1_ratio, gp_cdf, gp_density, gp_quantile, GpParams};

/// Target exceedance level, given directly or through a scaling factor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Level {
    Probability(f64),
    /// Scaling factor `c >= 1`: `p = c^(1/gamma) k/n`, requiring `gamma < 0`.
    Scaling(f64),
}

/// `p = c^(1/gamma) k/n`: the level whose gap to the endpoint is `1/c` of the
/// gap at the intermediate threshold.
pub fn extreme_level(c: f64, gamma: f64, k: usize, n: usize) -> Result<f64> {
    check_counts(k, n)?;
    if !(c >= 1.0) || !c.is_finite() {
        return Err(Error::Domain(format!("scaling factor must be >= 1, got {c}")));
    }
    if !(gamma < 0.0) {
        return Err(Error::Domain(format!(
            "scaling factors need a finite endpoint (gamma < 0), got gamma = {gamma}; supply the level p directly"
        )));
    }
    let base = k as f64 / n as f64;
    if c == 1.0 {
        return Ok(base);
    }
    Ok((c.ln() / gamma).exp() * base)
}

/// Posterior summary of the level `c^(1/gamma) k/n` over chain draws.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorLevel {
    pub mean: f64,
    /// Level for every draw with `gamma < 0`.
    pub values: Vec<f64>,
    /// Draws with `gamma >= 0`, for which the level is undefined.
    pub excluded: usize,
}

/// Levels implied by a scaling factor for each draw with `gamma < 0`.
pub fn posterior_level(draws: &[GpParams], c: f64, k: usize, n: usize) -> Result<PosteriorLevel> {
    let mut values = Vec::with_capacity(draws.len());
    for d in draws {
        if d.gamma() < 0.0 {
            values.push(extreme_level(c, d.gamma(), k, n)?);
        }
    }
    if values.is_empty() {
        return Err(Error::Domain(
            "no posterior draw has gamma < 0; scaling factors need a finite endpoint, supply p directly".into(),
        ));
    }
    Ok(PosteriorLevel {
        mean: crate::stats::mean(&values),
        excluded: draws.len() - values.len(),
        values,
    })
}

fn check_counts(k: usize, n: usize) -> Result<()> {
    if k == 0 || k >= n {
        return Err(Error::Domain(format!("need 1 <= k < n, got k={k}, n={n}")));
    }
    Ok(())
}

/// `log(np/k)`, exactly zero at `p = k/n`.
fn log_ratio(p: f64, k: usize, n: usize) -> Result<f64> {
    check_counts(k, n)?;
    let base = k as f64 / n as f64;
    if !(p > 0.0 && p <= base) {
        return Err(Error::Domain(format!(
            "level p must lie in (0, k/n] = (0, {base}], got {p}"
        )));
    }
    if p == base {
        return Ok(0.0);
    }
    Ok((p * n as f64 / k as f64).ln())
}

/// Extreme quantile `Q(p)` above the threshold.
pub fn extreme_quantile(params: &GpParams, threshold: f64, k: usize, n: usize, p: f64) -> Result<f64> {
    let lr = log_ratio(p, k, n)?;
    Ok(threshold + params.sigma() * expm1_ratio(params.gamma(), -lr))
}

/// Plug-in excess law at level `p`: `GP((np/k)^(-gamma) sigma, gamma)`.
pub fn predictive_params(params: &GpParams, k: usize, n: usize, p: f64) -> Result<GpParams> {
    let lr = log_ratio(p, k, n)?;
    GpParams::new(params.sigma() * (-params.gamma() * lr).exp(), params.gamma())
}

/// Excess or peak predictive law.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Kind {
    Excess,
    Peak,
}

impl Kind {
    pub fn label(&self) -> &'static str {
        match self {
            Kind::Excess => "excess",
            Kind::Peak => "peak",
        }
    }
}

/// One GP component: the excess law and the location of its peak version.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Component {
    pub excess: GpParams,
    /// `Q(p)` for this component's parameters.
    pub location: f64,
}

impl Component {
    fn offset(&self, kind: Kind) -> f64 {
        match kind {
            Kind::Excess => 0.0,
            Kind::Peak => self.location,
        }
    }

    fn density(&self, x: f64, kind: Kind) -> f64 {
        gp_density(x - self.offset(kind), &self.excess)
    }

    fn cdf(&self, x: f64, kind: Kind) -> f64 {
        gp_cdf(x - self.offset(kind), &self.excess)
    }

    fn quantile(&self, q: f64, kind: Kind) -> f64 {
        self.offset(kind) + gp_quantile(q, &self.excess).expect("level checked by caller")
    }

    /// Support endpoints of the component.
    pub fn support(&self, kind: Kind) -> (f64, f64) {
        let s = self.excess.support();
        let o = self.offset(kind);
        (o + s.lower, o + s.upper)
    }
}

/// Everything that defines a predictive law: parameters (one or a chain of
/// draws), threshold, `k`, `n` and level `p`.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictiveSpec {
    threshold: f64,
    k: usize,
    n: usize,
    p: f64,
    components: Vec<Component>,
}

impl PredictiveSpec {
    /// Plug-in law for a single parameter value.
    pub fn plug_in(params: &GpParams, threshold: f64, k: usize, n: usize, p: f64) -> Result<Self> {
        Self::posterior(std::slice::from_ref(params), threshold, k, n, p)
    }

    /// Equally weighted mixture over posterior draws.
    pub fn posterior(draws: &[GpParams], threshold: f64, k: usize, n: usize, p: f64) -> Result<Self> {
        if draws.is_empty() {
            return Err(Error::Input("posterior predictive needs at least one draw".into()));
        }
        if !threshold.is_finite() {
            return Err(Error::Input(format!("threshold must be finite, got {threshold}")));
        }
        let components = draws
            .iter()
            .map(|d| {
                Ok(Component {
                    excess: predictive_params(d, k, n, p)?,
                    location: extreme_quantile(d, threshold, k, n, p)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            threshold,
            k,
            n,
            p,
            components,
        })
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn components(&self) -> &[Component] {
        &self.components
    }

    pub fn is_mixture(&self) -> bool {
        self.components.len() > 1
    }

    /// Mixture density.
    pub fn density(&self, x: f64, kind: Kind) -> f64 {
        let m = self.components.len() as f64;
        self.components.iter().map(|c| c.density(x, kind)).sum::<f64>() / m
    }

    /// Mixture distribution function.
    pub fn cdf(&self, x: f64, kind: Kind) -> f64 {
        let m = self.components.len() as f64;
        self.components.iter().map(|c| c.cdf(x, kind)).sum::<f64>() / m
    }

    /// Quantile of the predictive law for `q` in `[0, 1)`.
    ///
    /// Mixtures are inverted by bisection on the averaged distribution
    /// function, bracketed by the smallest and largest component quantiles.
    pub fn quantile(&self, q: f64, kind: Kind) -> Result<f64> {
        if !(0.0..1.0).contains(&q) {
            return Err(Error::Domain(format!("quantile level must lie in [0, 1), got {q}")));
        }
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for c in &self.components {
            let x = c.quantile(q, kind);
            lo = lo.min(x);
            hi = hi.max(x);
        }
        if lo == hi {
            return Ok(lo);
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if !(mid > lo && mid < hi) {
                break;
            }
            if self.cdf(mid, kind) < q {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    /// Breakpoints covering every component support.
    pub fn breakpoints(&self, kind: Kind) -> Vec<f64> {
        let mut pts = Vec::with_capacity(2 * self.components.len());
        for c in &self.components {
            let (a, b) = c.support(kind);
            pts.push(a);
            pts.push(b);
        }
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        pts
    }
}

/// Excess predictive density `f*_{theta,p}` (a mixture for chain specs).
pub fn excess_predictive_density(x: f64, spec: &PredictiveSpec) -> f64 {
    spec.density(x, Kind::Excess)
}

/// Peak predictive density `g*_{theta,p}`, supported from `Q(p)` upwards.
pub fn peak_predictive_density(x: f64, spec: &PredictiveSpec) -> f64 {
    spec.density(x, Kind::Peak)
}

/// Monte Carlo posterior predictive density, the average of the plug-in
/// densities of the draws.
pub fn posterior_predictive_density(x: f64, spec: &PredictiveSpec, kind: Kind) -> f64 {
    spec.density(x, kind)
}

/// Equal-tailed predictive interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PredictiveInterval {
    pub lower: f64,
    pub upper: f64,
    /// Nominal probability `1 - alpha`.
    pub level: f64,
    pub kind: Kind,
}

impl PredictiveInterval {
    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }
}

/// `[q_{alpha/2}, q_{1-alpha/2}]` of the predictive law.
pub fn predictive_interval(spec: &PredictiveSpec, alpha: f64, kind: Kind) -> Result<PredictiveInterval> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Domain(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    Ok(PredictiveInterval {
        lower: spec.quantile(0.5 * alpha, kind)?,
        upper: spec.quantile(1.0 - 0.5 * alpha, kind)?,
        level: 1.0 - alpha,
        kind,
    })
}

/// `points` equally spaced abscissae between the `lo_q` and `hi_q` predictive
/// quantiles with the density at each.
pub fn density_grid(spec: &PredictiveSpec, kind: Kind, points: usize, lo_q: f64, hi_q: f64) -> Result<Vec<(f64, f64)>> {
    if points < 2 {
        return Err(Error::Domain(format!(
            "density grid needs at least 2 points, got {points}"
        )));
    }
    let a = spec.quantile(lo_q, kind)?;
    let b = spec.quantile(hi_q, kind)?;
    let step = (b - a) / (points - 1) as f64;
    Ok((0..points)
        .map(|i| {
            let x = if i + 1 == points { b } else { a + step * i as f64 };
            (x, spec.density(x, kind))
        })
        .collect())
}
