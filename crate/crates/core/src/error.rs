use thiserror::Error;

/// Errors raised by the forecasting library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Input data is malformed (non-finite values, empty samples, ...).
    #[error("invalid input: {0}")]
    Input(String),

    /// The data carry no information for the requested fit.
    #[error("degenerate data: {0}")]
    Degenerate(String),

    /// A closed-form estimator hit a division by zero.
    #[error("estimator singularity: {0}")]
    Singular(String),

    /// Adaptive quadrature stopped before reaching the requested tolerance.
    #[error(
        "quadrature did not converge: estimate {estimate:e}, achieved error {achieved:e}, requested {requested:e}"
    )]
    Quadrature {
        estimate: f64,
        achieved: f64,
        requested: f64,
    },

    /// The MCMC chain is stuck or accepts (almost) everything.
    #[error("degenerate chain: acceptance rate {rate:.4} outside [0.01, 0.99]")]
    ChainDegenerate { rate: f64 },

    /// A tail probability is too small to condition on.
    #[error("underflow: {0}")]
    Underflow(String),

    /// A simulation experiment could not be completed.
    #[error("experiment failed: {0}")]
    Experiment(String),
}

pub type Result<T> = std::result::Result<T, Error>;
