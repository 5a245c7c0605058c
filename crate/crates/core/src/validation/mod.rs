//! Simulation checks of the approximation, contraction and coverage
//! properties of the method.
//!
//! Hellinger distances use the convention `H^2 = 1 - \int sqrt(f g)`, so
//! `H` lies in `[0, 1]`. For densities that integrate to one this equals
//! `(1/2) \int (sqrt f - sqrt g)^2`, which is the form evaluated here: it has
//! no cancellation when `f` and `g` are close.

mod coverage;
mod oracle;

pub use coverage::{simulate_coverage, CoverageReport, CoverageSettings};
pub use oracle::{normalized_excess_density, DistributionOracle, NormalizedExcess};

use crate::error::{Error, Result};
use crate::gpd::{gp_density, GpParams};
use crate::predictive::{Kind, PredictiveSpec};
use crate::quadrature::{integrate, QuadConfig};

/// Hellinger distance between `f` and `g` on `[support.0, support.1]`.
///
/// `grid_size` (at least 64) sets the number of initial quadrature panels.
pub fn hellinger<F, G>(f: F, g: G, support: (f64, f64), grid_size: usize) -> Result<f64>
where
    F: Fn(f64) -> f64,
    G: Fn(f64) -> f64,
{
    hellinger_split(f, g, &[support.0, support.1], grid_size)
}

/// As [`hellinger`], with extra breakpoints (support endpoints of either
/// density) where the integrand may be singular.
pub fn hellinger_split<F, G>(f: F, g: G, points: &[f64], grid_size: usize) -> Result<f64>
where
    F: Fn(f64) -> f64,
    G: Fn(f64) -> f64,
{
    if grid_size < 64 {
        return Err(Error::Domain(format!("grid size must be at least 64, got {grid_size}")));
    }
    let mut pts: Vec<f64> = points.iter().copied().filter(|x| !x.is_nan()).collect();
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    if pts.len() < 2 {
        return Err(Error::Domain("support must have two distinct endpoints".into()));
    }
    let per_segment = grid_size.div_ceil(pts.len() - 1).max(1);
    let cfg = QuadConfig {
        abs_tol: 1e-18,
        rel_tol: 1e-8,
        max_panels: 200_000,
        initial_panels: per_segment,
        tail_scale: 1.0,
    };
    let integrand = |x: f64| {
        let d = f(x).max(0.0).sqrt() - g(x).max(0.0).sqrt();
        d * d
    };
    let h2 = 0.5 * integrate(integrand, &pts, &cfg)?.value;
    Ok(h2.clamp(0.0, 1.0).sqrt())
}

/// Default number of initial panels for the experiments.
pub const GRID_SIZE: usize = 256;

/// `H(l_t, h_gamma)` for the oracle at threshold `t`.
pub fn threshold_distance(oracle: &DistributionOracle, t: f64) -> Result<f64> {
    let l = normalized_excess_density(oracle, t)?;
    let h = GpParams::new(1.0, oracle.gamma())?;
    let pts = [0.0, l.upper(), h.support().upper];
    hellinger_split(|y| l.density(y), |y| gp_density(y, &h), &pts, GRID_SIZE)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContractionRow {
    pub v: f64,
    /// `t = F^{-1}(1 - 1/v)`.
    pub t: f64,
    pub h: f64,
    pub abs_a: f64,
    /// `H / |A(v)|`; `None` when `A` vanishes.
    pub ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContractionTable {
    pub oracle: String,
    pub rows: Vec<ContractionRow>,
}

impl ContractionTable {
    pub fn min_ratio(&self) -> Option<f64> {
        self.rows.iter().filter_map(|r| r.ratio).reduce(f64::min)
    }

    pub fn max_ratio(&self) -> Option<f64> {
        self.rows.iter().filter_map(|r| r.ratio).reduce(f64::max)
    }

    /// `max ratio / min ratio`.
    pub fn ratio_spread(&self) -> Option<f64> {
        Some(self.max_ratio()? / self.min_ratio()?)
    }

    pub fn is_decreasing(&self) -> bool {
        self.rows.windows(2).all(|w| w[1].h < w[0].h)
    }
}

/// `H(l_t, h_gamma)` and `|A(v)|` at `t = F^{-1}(1 - 1/v)` over `v_grid`.
pub fn contraction_experiment(oracle: &DistributionOracle, v_grid: &[f64]) -> Result<ContractionTable> {
    if v_grid.is_empty() || v_grid.windows(2).any(|w| !(w[1] > w[0])) || !(v_grid[0] > 1.0) {
        return Err(Error::Domain("v grid must be increasing and above 1".into()));
    }
    let rows = v_grid
        .iter()
        .map(|&v| {
            let t = oracle.upper_quantile(1.0 / v)?;
            let h = threshold_distance(oracle, t)?;
            let abs_a = oracle.second_order(v).abs();
            let ratio = (abs_a > 0.0).then(|| h / abs_a);
            Ok(ContractionRow { v, t, h, abs_a, ratio })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ContractionTable {
        oracle: oracle.name(),
        rows,
    })
}

/// `H(g*_{t'}, g*_p)`: distance between the true law of `X | X > Q(p)` and
/// the plug-in peak predictive law built from the exact GP approximation
/// `(s(t), gamma)` at the intermediate threshold `t = F^{-1}(1 - k/n)`.
pub fn extrapolation_distance(oracle: &DistributionOracle, n: usize, k: usize, p: f64) -> Result<f64> {
    let base = k as f64 / n as f64;
    let t = oracle.upper_quantile(base)?;
    let theta = GpParams::new(oracle.scaling(t), oracle.gamma())?;
    let spec = PredictiveSpec::plug_in(&theta, t, k, n, p)?;
    let t_true = oracle.upper_quantile(p)?;
    let log_tail = oracle.log_survival(t_true);
    let truth = |x: f64| {
        if x < t_true {
            0.0
        } else {
            (oracle.log_density(x) - log_tail).exp()
        }
    };
    let mut pts = spec.breakpoints(Kind::Peak);
    pts.push(t_true);
    pts.push(oracle.endpoint());
    hellinger_split(truth, |x| spec.density(x, Kind::Peak), &pts, GRID_SIZE)
}

fn check_rate_arg(x: f64) -> Result<()> {
    if !(x > 1.0) || x.is_nan() {
        return Err(Error::Domain(format!("rate functions need x > 1, got {x}")));
    }
    Ok(())
}

/// `w_gamma(x)`: `log x` for `gamma > 0`, `log^2 x` for `gamma = 0`,
/// `x^(-gamma)` for `gamma < 0`.
pub fn rate_w(gamma: f64, x: f64) -> Result<f64> {
    check_rate_arg(x)?;
    Ok(if gamma > 0.0 {
        x.ln()
    } else if gamma == 0.0 {
        x.ln().powi(2)
    } else {
        x.powf(-gamma)
    })
}

/// `z_gamma(x)`: `w_gamma(x)` for `gamma >= 0`, `log(x) w_gamma(x)` otherwise.
pub fn rate_z(gamma: f64, x: f64) -> Result<f64> {
    let w = rate_w(gamma, x)?;
    Ok(if gamma >= 0.0 { w } else { x.ln() * w })
}
