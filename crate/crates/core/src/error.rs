use thiserror::Error;

/// Errors raised by the numerical engine and the models built on it.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("gamma function pole at z = {re} + {im}i")]
    GammaPole { re: f64, im: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("contour failure: {0}")]
    ContourFailure(String),

    #[error("no convergence: {what} (estimate {estimate:e}, error {error:e})")]
    NonConvergence {
        what: String,
        estimate: f64,
        error: f64,
    },

    #[error("degenerate dominant pole at {0}")]
    DegeneratePole(f64),

    #[error("outage value {0} outside [0, 1] beyond roundoff")]
    OutOfRange(f64),

    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
