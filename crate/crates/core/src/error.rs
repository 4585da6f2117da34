use thiserror::Error;

/// Errors raised by model construction, simulation, estimation and selection.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("polynomial root with modulus {modulus:.12} is not outside the unit circle ({context})")]
    RootInsideUnitCircle { modulus: f64, context: String },

    #[error("volatility model is not stationary (margin {margin:.6})")]
    NonStationary { margin: f64 },

    #[error("conditional variance overflow at step {step} (sigma^2 = {value:e})")]
    Overflow { step: usize, value: f64 },

    #[error("series too short: need {needed} observations, have {available}")]
    InsufficientData { needed: usize, available: usize },

    #[error("index {index} out of range [{lo}, {hi}]")]
    OutOfRange { index: usize, lo: usize, hi: usize },

    #[error("matrix for candidate {candidate} is singular or ill-conditioned (cond = {cond:e})")]
    IllConditioned { candidate: String, cond: f64 },

    #[error("filter truncation did not reach tolerance {tol:e} within {cap} coefficients")]
    TruncationCap { tol: f64, cap: usize },

    #[error("ambiguous oracle set: {0}")]
    AmbiguousOracle(String),

    #[error("all candidates failed: {0}")]
    AllCandidatesFailed(String),

    #[error("{0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
