//! Threshold selection by order statistics and frequentist GP fits.
//!
//! The threshold is the `(n-k)`-th smallest observation `X_{n-k,n}`; the `k`
//! largest observations minus that threshold are the excesses every estimator
//! consumes. Two estimators are provided: constrained maximum likelihood over
//! `sigma > 0, gamma > -1/2` ([`fit_mle`]) and generalized probability-weighted
//! moments ([`fit_gpwm`]).

mod gpwm;
mod mle;

pub use gpwm::{fit_gpwm, gpwm_moments};
pub use mle::{fit_mle, fit_mle_with, MleOptions};

use crate::error::{Error, Result};
use crate::gpd::GpParams;

/// Threshold and sorted excesses extracted from a sample.
#[derive(Debug, Clone, PartialEq)]
pub struct ExcessData {
    n: usize,
    threshold: f64,
    excesses: Vec<f64>,
}

impl ExcessData {
    /// Builds excess data from already computed excesses.
    ///
    /// `excesses` are sorted here; they must be finite and non-negative, and
    /// `1 <= excesses.len() < n`.
    pub fn from_excesses(n: usize, threshold: f64, mut excesses: Vec<f64>) -> Result<Self> {
        let k = excesses.len();
        if k == 0 || k >= n {
            return Err(Error::Domain(format!("need 1 <= k < n, got k={k}, n={n}")));
        }
        if !threshold.is_finite() {
            return Err(Error::Input(format!("threshold must be finite, got {threshold}")));
        }
        if excesses.iter().any(|x| !x.is_finite() || *x < 0.0) {
            return Err(Error::Input("excesses must be finite and non-negative".into()));
        }
        excesses.sort_by(f64::total_cmp);
        Ok(Self { n, threshold, excesses })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.excesses.len()
    }

    /// `X_{n-k,n}`.
    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    /// Excesses in ascending order.
    pub fn excesses(&self) -> &[f64] {
        &self.excesses
    }

    /// Effective sample fraction `k/n`.
    pub fn fraction(&self) -> f64 {
        self.k() as f64 / self.n as f64
    }

    /// The top-`k` order statistics, ascending.
    pub fn top_order_statistics(&self) -> Vec<f64> {
        self.excesses.iter().map(|e| e + self.threshold).collect()
    }

    pub fn max_excess(&self) -> f64 {
        *self.excesses.last().expect("k >= 1")
    }

    pub fn mean_excess(&self) -> f64 {
        crate::stats::mean(&self.excesses)
    }
}

/// Splits a sample at its `(n-k)`-th order statistic.
///
/// Ties with the threshold produce zero excesses, which are kept.
pub fn extract_excesses(sample: &[f64], k: usize) -> Result<ExcessData> {
    let n = sample.len();
    if k == 0 || k >= n {
        return Err(Error::Domain(format!("need 1 <= k < n, got k={k}, n={n}")));
    }
    if let Some(bad) = sample.iter().find(|x| !x.is_finite()) {
        return Err(Error::Input(format!("sample contains a non-finite value ({bad})")));
    }
    let mut sorted = sample.to_vec();
    sorted.sort_by(f64::total_cmp);
    let threshold = sorted[n - k - 1];
    let excesses = sorted[n - k..].iter().map(|x| x - threshold).collect();
    Ok(ExcessData { n, threshold, excesses })
}

/// Estimation method.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    Ml,
    Gpwm,
    Bayes,
}

impl Method {
    pub fn label(&self) -> &'static str {
        match self {
            Method::Ml => "ml",
            Method::Gpwm => "gpwm",
            Method::Bayes => "bayes",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "ml" | "mle" => Ok(Method::Ml),
            "gpwm" => Ok(Method::Gpwm),
            "bayes" | "bayesian" => Ok(Method::Bayes),
            other => Err(Error::Domain(format!(
                "unknown method '{other}' (expected ml, gpwm, bayes)"
            ))),
        }
    }
}

/// Where a point estimate falls relative to the regions the theory covers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Validity {
    Valid,
    /// GPWM estimate with `gamma >= 1/2`.
    OutsideGpwmRange,
    /// `sigma <= 0` or `gamma <= -1/2`; no GP law corresponds to the estimate.
    OutsideParameterSpace,
}

impl Validity {
    pub fn label(&self) -> &'static str {
        match self {
            Validity::Valid => "valid",
            Validity::OutsideGpwmRange => "outside_gpwm_range",
            Validity::OutsideParameterSpace => "outside_parameter_space",
        }
    }
}

/// Output of a frequentist fit.
///
/// The raw estimate is kept even when it is not a valid [`GpParams`].
#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub sigma: f64,
    pub gamma: f64,
    pub method: Method,
    pub loglik: Option<f64>,
    pub converged: bool,
    pub iterations: usize,
    pub validity: Validity,
}

impl FitResult {
    pub fn params(&self) -> Result<GpParams> {
        GpParams::new(self.sigma, self.gamma)
    }

    pub fn is_valid(&self) -> bool {
        self.validity == Validity::Valid
    }

    /// Converged and inside the estimator's validity region.
    pub fn usable(&self) -> bool {
        self.converged && self.is_valid()
    }
}

/// Right endpoint `threshold - sigma/gamma` for `gamma < 0`, `+inf` otherwise.
pub fn endpoint_estimate(params: &GpParams, threshold: f64) -> f64 {
    if params.gamma() < 0.0 {
        threshold - params.sigma() / params.gamma()
    } else {
        f64::INFINITY
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_statistic_threshold() {
        let d = extract_excesses(&[1.0, 5.0, 3.0, 2.0, 4.0], 2).unwrap();
        assert_eq!(d.threshold(), 3.0);
        assert_eq!(d.excesses(), &[1.0, 2.0]);
        assert_eq!((d.n(), d.k()), (5, 2));
        assert_eq!(d.top_order_statistics(), vec![4.0, 5.0]);
    }

    #[test]
    fn ties_keep_zero_excesses() {
        let d = extract_excesses(&[2.0, 2.0, 2.0, 7.0], 2).unwrap();
        assert_eq!(d.threshold(), 2.0);
        assert_eq!(d.excesses(), &[0.0, 5.0]);
    }

    #[test]
    fn extraction_errors() {
        assert!(matches!(extract_excesses(&[1.0, 2.0], 2), Err(Error::Domain(_))));
        assert!(matches!(extract_excesses(&[1.0, 2.0], 0), Err(Error::Domain(_))));
        assert!(matches!(
            extract_excesses(&[1.0, f64::NAN, 3.0], 1),
            Err(Error::Input(_))
        ));
        assert!(matches!(
            extract_excesses(&[1.0, f64::INFINITY, 3.0], 1),
            Err(Error::Input(_))
        ));
    }

    #[test]
    fn endpoint_examples() {
        let ml = GpParams::new(1.65, -0.34).unwrap();
        assert!((endpoint_estimate(&ml, 34.0) - 38.84).abs() < 0.1);
        let pwm = GpParams::new(1.59, -0.29).unwrap();
        assert!((endpoint_estimate(&pwm, 34.0) - 39.46).abs() < 0.1);
        let heavy = GpParams::new(1.0, 0.2).unwrap();
        assert_eq!(endpoint_estimate(&heavy, 10.0), f64::INFINITY);
    }

    #[test]
    fn method_parsing() {
        assert_eq!("ML".parse::<Method>().unwrap(), Method::Ml);
        assert_eq!("gpwm".parse::<Method>().unwrap(), Method::Gpwm);
        assert_eq!(" bayes ".parse::<Method>().unwrap(), Method::Bayes);
        assert!("hill".parse::<Method>().is_err());
    }
}
