use rand::Rng;
use rand_distr::{Distribution, Open01};

use crate::error::{Error, Result};
use crate::gpd::{gp_density, gp_log_density, gp_quantile_upper, gp_survival, log1p_ratio, GpParams};

/// Synthetic law with known tail behaviour.
///
/// `A(v) = v U''(v) / U'(v) + 1 - gamma` with `U(v) = F^{-1}(1 - 1/v)`, and
/// `s(t) = (1 - F(t)) / F'(t)`.
///
/// * `ExactGp(sigma, gamma)`: `U(v) = sigma (v^gamma - 1)/gamma`, so `A = 0` and
///   `s(t) = sigma + gamma t`.
/// * `Exponential { rate }`: the `gamma = 0` member, `A = 0`, `s = 1/rate`.
/// * `Burr { tau, lambda }`: `1 - F(x) = (1 + x^tau)^(-lambda)` on `x > 0`.
///   With `w = v^(1/lambda)`, `U(v) = (w - 1)^(1/tau)` and
///   `A(v) = (1/tau - 1) / (lambda (w - 1))`; `gamma = 1/(tau lambda)`,
///   `rho = -1/lambda`.
/// * `FiniteEndpointPower { tau, lambda, endpoint }`: `X = endpoint - 1/Y` with
///   `Y` Burr, so `1 - F(x) = (1 + d^(-tau))^(-lambda)` with `d = endpoint - x`.
///   `U(v) = endpoint - (w - 1)^(-1/tau)` and
///   `A(v) = -(1/tau + 1) / (lambda (w - 1))`; `gamma = -1/(tau lambda)`,
///   `rho = -1/lambda`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DistributionOracle {
    ExactGp(GpParams),
    Exponential { rate: f64 },
    Burr { tau: f64, lambda: f64 },
    FiniteEndpointPower { tau: f64, lambda: f64, endpoint: f64 },
}

/// `log(1 + d^(-tau))`, stable for small and large `d`.
fn log1p_inv_pow(d: f64, tau: f64) -> f64 {
    if d < 1.0 {
        -tau * d.ln() + d.powf(tau).ln_1p()
    } else {
        d.powf(-tau).ln_1p()
    }
}

fn check_second_order(gamma: f64, rho: f64) -> Result<(f64, f64)> {
    if !(rho < 0.0) || !rho.is_finite() {
        return Err(Error::Domain(format!("second-order index must be negative, got {rho}")));
    }
    let lambda = -1.0 / rho;
    let tau = rho.abs() / gamma.abs();
    if (tau - 1.0).abs() < 1e-12 && gamma > 0.0 {
        return Err(Error::Domain(
            "Burr with tau = 1 has A = 0; pick another (gamma, rho)".into(),
        ));
    }
    Ok((tau, lambda))
}

impl DistributionOracle {
    pub fn exact_gp(sigma: f64, gamma: f64) -> Result<Self> {
        Ok(Self::ExactGp(GpParams::new(sigma, gamma)?))
    }

    pub fn exponential(rate: f64) -> Result<Self> {
        if !(rate > 0.0) || !rate.is_finite() {
            return Err(Error::Domain(format!("rate must be positive, got {rate}")));
        }
        Ok(Self::Exponential { rate })
    }

    /// Burr law with extreme value index `gamma > 0` and second-order index `rho < 0`.
    pub fn burr(gamma: f64, rho: f64) -> Result<Self> {
        if !(gamma > 0.0) || !gamma.is_finite() {
            return Err(Error::Domain(format!("Burr oracle needs gamma > 0, got {gamma}")));
        }
        let (tau, lambda) = check_second_order(gamma, rho)?;
        Ok(Self::Burr { tau, lambda })
    }

    /// Reversed Burr law with index `gamma < 0`, second-order index `rho < 0`
    /// and the given right endpoint.
    pub fn finite_endpoint_power(gamma: f64, rho: f64, endpoint: f64) -> Result<Self> {
        if !(gamma < 0.0) || !gamma.is_finite() {
            return Err(Error::Domain(format!(
                "finite-endpoint oracle needs gamma < 0, got {gamma}"
            )));
        }
        if !endpoint.is_finite() {
            return Err(Error::Domain(format!("endpoint must be finite, got {endpoint}")));
        }
        let (tau, lambda) = check_second_order(gamma, rho)?;
        Ok(Self::FiniteEndpointPower { tau, lambda, endpoint })
    }

    /// Oracle from a CLI-style name with default parameters:
    /// `exact-gp` (1, 0.2), `exponential` (rate 1), `burr` (0.25, -0.5),
    /// `finite-endpoint` (-0.3, -1, endpoint 0).
    pub fn from_name(name: &str) -> Result<Self> {
        match name.trim().to_ascii_lowercase().as_str() {
            "exact-gp" | "exactgp" | "gp" => Self::exact_gp(1.0, 0.2),
            "exponential" | "exp" => Self::exponential(1.0),
            "burr" => Self::burr(0.25, -0.5),
            "finite-endpoint" | "finite-endpoint-power" | "reversed-burr" => {
                Self::finite_endpoint_power(-0.3, -1.0, 0.0)
            }
            other => Err(Error::Domain(format!(
                "unknown oracle '{other}' (expected exact-gp, exponential, burr, finite-endpoint)"
            ))),
        }
    }

    pub fn name(&self) -> String {
        match self {
            Self::ExactGp(p) => format!("exact-gp(sigma={}, gamma={})", p.sigma(), p.gamma()),
            Self::Exponential { rate } => format!("exponential(rate={rate})"),
            Self::Burr { .. } => format!("burr(gamma={}, rho={})", self.gamma(), self.rho().unwrap_or(0.0)),
            Self::FiniteEndpointPower { endpoint, .. } => format!(
                "finite-endpoint(gamma={}, rho={}, endpoint={endpoint})",
                self.gamma(),
                self.rho().unwrap_or(0.0)
            ),
        }
    }

    pub fn gamma(&self) -> f64 {
        match *self {
            Self::ExactGp(p) => p.gamma(),
            Self::Exponential { .. } => 0.0,
            Self::Burr { tau, lambda } => 1.0 / (tau * lambda),
            Self::FiniteEndpointPower { tau, lambda, .. } => -1.0 / (tau * lambda),
        }
    }

    /// Second-order index; `None` when `A` vanishes identically.
    pub fn rho(&self) -> Option<f64> {
        match *self {
            Self::ExactGp(_) | Self::Exponential { .. } => None,
            Self::Burr { lambda, .. } | Self::FiniteEndpointPower { lambda, .. } => Some(-1.0 / lambda),
        }
    }

    /// Left end of the support.
    pub fn lower(&self) -> f64 {
        match self {
            Self::FiniteEndpointPower { .. } => f64::NEG_INFINITY,
            _ => 0.0,
        }
    }

    /// Right endpoint `x*`.
    pub fn endpoint(&self) -> f64 {
        match *self {
            Self::ExactGp(p) => p.support().upper,
            Self::FiniteEndpointPower { endpoint, .. } => endpoint,
            _ => f64::INFINITY,
        }
    }

    pub fn log_survival(&self, x: f64) -> f64 {
        match *self {
            Self::ExactGp(p) => {
                if x <= 0.0 {
                    0.0
                } else if x >= p.support().upper {
                    f64::NEG_INFINITY
                } else {
                    -log1p_ratio(p.gamma(), x / p.sigma())
                }
            }
            Self::Exponential { rate } => -rate * x.max(0.0),
            Self::Burr { tau, lambda } => {
                if x <= 0.0 {
                    0.0
                } else {
                    -lambda * x.powf(tau).ln_1p()
                }
            }
            Self::FiniteEndpointPower { tau, lambda, endpoint } => {
                let d = endpoint - x;
                if d <= 0.0 {
                    f64::NEG_INFINITY
                } else {
                    -lambda * log1p_inv_pow(d, tau)
                }
            }
        }
    }

    pub fn survival(&self, x: f64) -> f64 {
        match self {
            Self::ExactGp(p) => gp_survival(x, p),
            _ => self.log_survival(x).exp(),
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        -self.log_survival(x).exp_m1()
    }

    pub fn log_density(&self, x: f64) -> f64 {
        match *self {
            Self::ExactGp(p) => gp_log_density(x, &p),
            Self::Exponential { rate } => {
                if x < 0.0 {
                    f64::NEG_INFINITY
                } else {
                    rate.ln() - rate * x
                }
            }
            Self::Burr { tau, lambda } => {
                if x <= 0.0 {
                    return f64::NEG_INFINITY;
                }
                (lambda * tau).ln() + (tau - 1.0) * x.ln() - (lambda + 1.0) * x.powf(tau).ln_1p()
            }
            Self::FiniteEndpointPower { tau, lambda, endpoint } => {
                let d = endpoint - x;
                if d <= 0.0 {
                    return f64::NEG_INFINITY;
                }
                (lambda * tau).ln() - (tau + 1.0) * d.ln() - (lambda + 1.0) * log1p_inv_pow(d, tau)
            }
        }
    }

    pub fn density(&self, x: f64) -> f64 {
        match self {
            Self::ExactGp(p) => gp_density(x, p),
            _ => self.log_density(x).exp(),
        }
    }

    /// `x` with `1 - F(x) = s`, for `s` in `(0, 1]`.
    pub fn upper_quantile(&self, s: f64) -> Result<f64> {
        if !(s > 0.0 && s <= 1.0) {
            return Err(Error::Domain(format!("tail probability must lie in (0, 1], got {s}")));
        }
        let y = -s.ln();
        Ok(match *self {
            Self::ExactGp(p) => gp_quantile_upper(s, &p),
            Self::Exponential { rate } => y / rate,
            Self::Burr { tau, lambda } => (y / lambda).exp_m1().powf(1.0 / tau),
            Self::FiniteEndpointPower { tau, lambda, endpoint } => endpoint - (y / lambda).exp_m1().powf(-1.0 / tau),
        })
    }

    /// `F^{-1}(q)` for `q` in `[0, 1)`.
    pub fn quantile(&self, q: f64) -> Result<f64> {
        if !(0.0..1.0).contains(&q) {
            return Err(Error::Domain(format!("quantile level must lie in [0, 1), got {q}")));
        }
        if q == 0.0 {
            return Ok(self.lower());
        }
        self.upper_quantile(1.0 - q)
    }

    /// `A(v)` for `v > 1`.
    pub fn second_order(&self, v: f64) -> f64 {
        match *self {
            Self::ExactGp(_) | Self::Exponential { .. } => 0.0,
            Self::Burr { tau, lambda } => (1.0 / tau - 1.0) / (lambda * (v.ln() / lambda).exp_m1()),
            Self::FiniteEndpointPower { tau, lambda, .. } => -(1.0 / tau + 1.0) / (lambda * (v.ln() / lambda).exp_m1()),
        }
    }

    /// `s(t) = (1 - F(t)) / F'(t)`.
    pub fn scaling(&self, t: f64) -> f64 {
        match *self {
            Self::ExactGp(p) => p.sigma() + p.gamma() * t.max(0.0),
            Self::Exponential { rate } => 1.0 / rate,
            Self::Burr { tau, lambda } => (1.0 + t.powf(tau)) / (lambda * tau * t.powf(tau - 1.0)),
            Self::FiniteEndpointPower { tau, lambda, endpoint } => {
                let d = endpoint - t;
                (d.powf(tau) + 1.0) * d / (lambda * tau)
            }
        }
    }

    /// `m` draws by inverse-CDF sampling.
    pub fn sample_rng<R: Rng + ?Sized>(&self, m: usize, rng: &mut R) -> Vec<f64> {
        (0..m)
            .map(|_| {
                let u: f64 = Open01.sample(rng);
                self.upper_quantile(u).expect("u lies in (0, 1)")
            })
            .collect()
    }
}

/// Density of `(X - t)/s(t)` given `X > t`.
#[derive(Debug, Clone, Copy)]
pub struct NormalizedExcess {
    oracle: DistributionOracle,
    t: f64,
    scale: f64,
    log_tail: f64,
}

impl NormalizedExcess {
    pub fn threshold(&self) -> f64 {
        self.t
    }

    /// `s(t)`.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn density(&self, y: f64) -> f64 {
        if y < 0.0 {
            return 0.0;
        }
        (self.oracle.log_density(self.t + self.scale * y) + self.scale.ln() - self.log_tail).exp()
    }

    /// Right end of the support, `(x* - t)/s(t)`.
    pub fn upper(&self) -> f64 {
        (self.oracle.endpoint() - self.t) / self.scale
    }
}

/// The normalized excess density `l_t(y) = f_t(s(t) y) s(t)`.
pub fn normalized_excess_density(oracle: &DistributionOracle, t: f64) -> Result<NormalizedExcess> {
    if !(t < oracle.endpoint()) || !t.is_finite() {
        return Err(Error::Domain(format!(
            "threshold {t} is not below the endpoint {}",
            oracle.endpoint()
        )));
    }
    let log_tail = oracle.log_survival(t);
    if log_tail < (1e-300f64).ln() {
        return Err(Error::Underflow(format!("tail probability beyond {t} is below 1e-300")));
    }
    let scale = oracle.scaling(t);
    if !(scale > 0.0) || !scale.is_finite() {
        return Err(Error::Domain(format!("scaling s({t}) = {scale} is not positive")));
    }
    Ok(NormalizedExcess {
        oracle: *oracle,
        t,
        scale,
        log_tail,
    })
}
