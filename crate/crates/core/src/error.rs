//! Crate-wide error type.
//!
//! Numerical routines fail loudly: precondition violations, unstable
//! time steps, contaminated comparisons and I/O problems all surface as
//! distinct variants so callers (and the CLI exit-code mapping) can tell
//! configuration mistakes from genuine numerical failures.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CoreError {
    /// A caller-supplied parameter violates a documented precondition.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Two fields (or a field and an operation) disagree on grid geometry.
    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    /// A numerical process lost stability or produced non-finite values.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// Not enough data to perform a fit or a quadrature.
    #[error("insufficient data: {0}")]
    InsufficientData(String),

    /// Reading or writing an on-disk artifact failed.
    #[error("i/o failure: {0}")]
    Io(String),
}

impl From<std::io::Error> for CoreError {
    fn from(e: std::io::Error) -> Self {
        CoreError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, CoreError>;
