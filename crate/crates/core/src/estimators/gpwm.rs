use super::{ExcessData, FitResult, Method, Validity};
use crate::error::{Error, Result};
use crate::gpd::GAMMA_LOWER;
use crate::stats::NeumaierSum;

/// The weighted moments `(P_n, Q_n)`.
///
/// `P_n` is the mean excess; `Q_n` weights the `i`-th largest excess by `i/k`.
pub fn gpwm_moments(data: &ExcessData) -> (f64, f64) {
    let k = data.k();
    let kf = k as f64;
    let mut p = NeumaierSum::default();
    let mut q = NeumaierSum::default();
    // Ascending storage: position j holds the (k - j)-th largest excess.
    for (j, &e) in data.excesses().iter().enumerate() {
        p.add(e);
        q.add((k - j) as f64 / kf * e);
    }
    (p.sum() / kf, q.sum() / kf)
}

/// Generalized probability-weighted moment estimator.
///
/// Estimates with `gamma >= 1/2` (or outside the parameter space) are returned
/// with a validity flag rather than rejected.
pub fn fit_gpwm(data: &ExcessData) -> Result<FitResult> {
    if data.k() < 2 {
        return Err(Error::Domain("GPWM needs at least two excesses".into()));
    }
    let (p, q) = gpwm_moments(data);
    if p <= 0.0 {
        return Err(Error::Degenerate("all excesses are zero".into()));
    }
    let r = p / (2.0 * q) - 1.0;
    if r == 0.0 || !r.is_finite() {
        return Err(Error::Singular("P/(2Q) = 1".into()));
    }
    let gamma = 1.0 - 1.0 / r;
    let sigma = p / r;
    let validity = if !(sigma > 0.0) || gamma <= GAMMA_LOWER {
        Validity::OutsideParameterSpace
    } else if gamma >= 0.5 {
        Validity::OutsideGpwmRange
    } else {
        Validity::Valid
    };
    Ok(FitResult {
        sigma,
        gamma,
        method: Method::Gpwm,
        loglik: None,
        converged: true,
        iterations: 0,
        validity,
    })
}
