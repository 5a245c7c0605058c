//! Constrained maximum likelihood for the GP excess model.
//!
//! Works in `(log sigma, gamma)`. A start is chosen among the GPWM estimate,
//! `(mean excess, 0.1)` and a coarse profile over `gamma` (for each grid
//! value the score equation in `sigma` is solved by bisection), then BFGS
//! polishes it. Infeasible trial points (`gamma <= -1/2 + 1e-6` or an excess
//! beyond the upper endpoint) are rejected inside the line search.

use super::{fit_gpwm, ExcessData, FitResult, Method, Validity};
use crate::error::{Error, Result};
use crate::gpd::{log1p_ratio, GAMMA_LOWER};
use crate::stats::NeumaierSum;

const GAMMA_FLOOR: f64 = GAMMA_LOWER + 1e-6;
const PROFILE_GAMMAS: [f64; 13] = [
    -0.45, -0.35, -0.25, -0.15, -0.05, 0.05, 0.15, 0.3, 0.5, 0.75, 1.0, 1.5, 2.5,
];

/// Stopping rule for the BFGS polish.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MleOptions {
    /// Sup-norm of the log-likelihood gradient in `(log sigma, gamma)`.
    pub grad_tol: f64,
    pub max_iter: usize,
}

impl Default for MleOptions {
    fn default() -> Self {
        Self {
            grad_tol: 1e-8,
            max_iter: 500,
        }
    }
}

/// `(log1p(a) - a/(1+a)) / gamma^2` with `a = gamma z`, stable at small `a`.
fn shape_score_core(gamma: f64, z: f64) -> f64 {
    let a = gamma * z;
    if a.abs() < 0.05 {
        // z^2 * sum_{m>=2} (-1)^m (m-1)/m a^(m-2)
        let mut acc = 0.0;
        for m in (2..=16).rev() {
            let mf = m as f64;
            let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
            acc = acc * a + sign * (mf - 1.0) / mf;
        }
        z * z * acc
    } else {
        (a.ln_1p() - a / (1.0 + a)) / (gamma * gamma)
    }
}

struct Eval {
    value: f64,
    grad: [f64; 2],
    /// Sum of absolute log-density terms; sets the rounding level of `value`.
    magnitude: f64,
}

/// Log-likelihood and its gradient in `(log sigma, gamma)`; `None` if infeasible.
fn evaluate(x: &[f64], log_sigma: f64, gamma: f64) -> Option<Eval> {
    if !(gamma > GAMMA_FLOOR) || !log_sigma.is_finite() || !gamma.is_finite() {
        return None;
    }
    let sigma = log_sigma.exp();
    let mut ll = NeumaierSum::default();
    let mut gu = NeumaierSum::default();
    let mut gg = NeumaierSum::default();
    let mut magnitude = 0.0;
    for &xi in x {
        let z = xi / sigma;
        let one_plus = 1.0 + gamma * z;
        if !(one_plus > 0.0) {
            return None;
        }
        let term = -log_sigma - (1.0 + gamma) * log1p_ratio(gamma, z);
        magnitude += term.abs();
        ll.add(term);
        gu.add(-1.0 + (1.0 + gamma) * z / one_plus);
        gg.add(shape_score_core(gamma, z) - z / one_plus);
    }
    let value = ll.sum();
    if !value.is_finite() {
        return None;
    }
    Some(Eval {
        value,
        grad: [gu.sum(), gg.sum()],
        magnitude,
    })
}

fn loglik_and_grad(x: &[f64], log_sigma: f64, gamma: f64) -> Option<(f64, [f64; 2])> {
    evaluate(x, log_sigma, gamma).map(|e| (e.value, e.grad))
}

fn loglik_only(x: &[f64], log_sigma: f64, gamma: f64) -> Option<f64> {
    evaluate(x, log_sigma, gamma).map(|e| e.value)
}

/// Profile scale for fixed `gamma`: root of the `log sigma` score.
fn profile_log_sigma(x: &[f64], gamma: f64) -> Option<f64> {
    let k = x.len() as f64;
    let xmax = x.iter().copied().fold(0.0, f64::max);
    let score = |s: f64| -> f64 { x.iter().map(|&xi| (1.0 + gamma) * xi / (s + gamma * xi)).sum::<f64>() - k };
    let mut lo = if gamma < 0.0 {
        (-gamma * xmax).ln()
    } else {
        (xmax * 1e-12).ln()
    };
    let mut hi = (xmax * 1e6 + 1.0).ln();
    let (flo, fhi) = (score(lo.exp() * (1.0 + 1e-12)), score(hi.exp()));
    if !(flo > 0.0 && fhi < 0.0) {
        return None;
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if score(mid.exp()) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

fn mat_vec(h: &[[f64; 2]; 2], v: [f64; 2]) -> [f64; 2] {
    [h[0][0] * v[0] + h[0][1] * v[1], h[1][0] * v[0] + h[1][1] * v[1]]
}

fn dot(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

/// Inverse of the negative Hessian of the log-likelihood by central
/// differences of the analytic gradient, if it is positive definite.
fn initial_inverse_hessian(x: &[f64], point: [f64; 2]) -> Option<[[f64; 2]; 2]> {
    let h = 1e-5;
    let mut hess = [[0.0; 2]; 2];
    for j in 0..2 {
        let mut up = point;
        let mut dn = point;
        up[j] += h;
        dn[j] -= h;
        let (_, gu) = loglik_and_grad(x, up[0], up[1])?;
        let (_, gd) = loglik_and_grad(x, dn[0], dn[1])?;
        for i in 0..2 {
            hess[i][j] = -(gu[i] - gd[i]) / (2.0 * h);
        }
    }
    let off = 0.5 * (hess[0][1] + hess[1][0]);
    let det = hess[0][0] * hess[1][1] - off * off;
    if !(hess[0][0] > 0.0 && det > 0.0) {
        return None;
    }
    Some([[hess[1][1] / det, -off / det], [-off / det, hess[0][0] / det]])
}

fn scaled_identity(k: usize) -> [[f64; 2]; 2] {
    let s = 1.0 / k as f64;
    [[s, 0.0], [0.0, s]]
}

/// Maximum likelihood fit with default options.
pub fn fit_mle(data: &ExcessData) -> Result<FitResult> {
    fit_mle_with(data, &MleOptions::default())
}

pub fn fit_mle_with(data: &ExcessData, opts: &MleOptions) -> Result<FitResult> {
    let x = data.excesses();
    let k = x.len();
    if k < 2 {
        return Err(Error::Domain("maximum likelihood needs at least two excesses".into()));
    }
    if data.max_excess() <= 0.0 {
        return Err(Error::Degenerate("all excesses are zero".into()));
    }

    // Stage 1: starting point.
    let mut candidates: Vec<[f64; 2]> = Vec::with_capacity(PROFILE_GAMMAS.len() + 2);
    if let Ok(pwm) = fit_gpwm(data) {
        if pwm.is_valid() {
            candidates.push([pwm.sigma.ln(), pwm.gamma]);
        }
    }
    candidates.push([data.mean_excess().ln(), 0.1]);
    for &g in &PROFILE_GAMMAS {
        if let Some(ls) = profile_log_sigma(x, g) {
            candidates.push([ls, g]);
        }
    }
    let mut start = None;
    let mut best = f64::NEG_INFINITY;
    for c in candidates {
        if let Some(v) = loglik_only(x, c[0], c[1]) {
            if v > best {
                best = v;
                start = Some(c);
            }
        }
    }
    let Some(mut point) = start else {
        return Err(Error::Degenerate("no feasible starting point".into()));
    };

    // Stage 2: BFGS on the negative log-likelihood.
    let first = evaluate(x, point[0], point[1]).expect("start is feasible");
    let (mut value, mut grad, mut magnitude) = (first.value, first.grad, first.magnitude);
    let mut inv_h = initial_inverse_hessian(x, point).unwrap_or_else(|| scaled_identity(k));
    let mut converged = false;
    let mut iterations = 0;
    while iterations < opts.max_iter {
        if grad[0].abs().max(grad[1].abs()) < opts.grad_tol {
            converged = true;
            break;
        }
        iterations += 1;
        // Ascent direction for the log-likelihood.
        let mut dir = mat_vec(&inv_h, grad);
        if dot(dir, grad) <= 0.0 {
            inv_h = scaled_identity(k);
            dir = mat_vec(&inv_h, grad);
        }
        let slope = dot(dir, grad);
        let noise = 8.0 * f64::EPSILON * magnitude.max(1.0);
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..80 {
            let trial = [point[0] + step * dir[0], point[1] + step * dir[1]];
            if let Some(e) = evaluate(x, trial[0], trial[1]) {
                if e.value >= value + 1e-4 * step * slope - noise {
                    accepted = Some((trial, e));
                    break;
                }
            }
            step *= 0.5;
        }
        let Some((trial, eval)) = accepted else {
            break;
        };
        let s = [trial[0] - point[0], trial[1] - point[1]];
        // Curvature pair for the negative log-likelihood.
        let g = eval.grad;
        let y = [grad[0] - g[0], grad[1] - g[1]];
        let sy = dot(s, y);
        if sy > 1e-12 * dot(s, s).sqrt() * dot(y, y).sqrt() && sy > 0.0 {
            let rho = 1.0 / sy;
            let hy = mat_vec(&inv_h, y);
            let yhy = dot(y, hy);
            let mut next = inv_h;
            for i in 0..2 {
                for j in 0..2 {
                    next[i][j] += -rho * (hy[i] * s[j] + s[i] * hy[j]) + (rho * rho * yhy + rho) * s[i] * s[j];
                }
            }
            inv_h = next;
        }
        point = trial;
        value = eval.value;
        grad = g;
        magnitude = eval.magnitude;
        if s[0] == 0.0 && s[1] == 0.0 {
            break;
        }
    }
    if !converged && grad[0].abs().max(grad[1].abs()) < opts.grad_tol {
        converged = true;
    }

    Ok(FitResult {
        sigma: point[0].exp(),
        gamma: point[1],
        method: Method::Ml,
        loglik: Some(value),
        converged,
        iterations,
        validity: Validity::Valid,
    })
}
