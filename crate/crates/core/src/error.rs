use thiserror::Error;

/// Errors produced by the simulation and optimization routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid covariance: {0}")]
    InvalidState(String),

    #[error("output envelope is not normalized (norm² = {0})")]
    NotNormalized(f64),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("unstable drift: eigenvalue {re:+.6e}{im:+.6e}i has non-negative real part")]
    Unstable { re: f64, im: f64 },

    #[error("integration failed at t = {t:.6e}: {reason}")]
    Integration { t: f64, reason: String },

    #[error("precision loss: covariance entries reach {magnitude:.3e}")]
    PrecisionLoss { magnitude: f64 },

    #[error("objective failed at (eps, eta, xi) = ({eps:.4e}, {eta:.4e}, {xi:.4e}): {source}")]
    Objective {
        eps: f64,
        eta: f64,
        xi: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("optimization failed; best grid point (eps, eta, xi) = ({:.4e}, {:.4e}, {:.4e}) with value {value:.6}", best[0], best[1], best[2])]
    OptimizationFailed { best: [f64; 3], value: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
