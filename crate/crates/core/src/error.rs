//! Crate-wide error type.

use thiserror::Error;

/// Errors surfaced by the numerical kernels.
///
/// `Validation` maps to CLI exit code 2, `Divergence` to 3, `Io` to 4.
#[derive(Debug, Error)]
pub enum CoreError {
    /// A precondition on sizes, ranges, or flags was violated.
    #[error("validation: {0}")]
    Validation(String),

    /// An iteration failed to converge or a field became non-finite.
    #[error("numerical divergence: {0}")]
    Divergence(String),

    /// Filesystem or serialization failure.
    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for CoreError {
    fn from(e: std::io::Error) -> Self {
        CoreError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for CoreError {
    fn from(e: serde_json::Error) -> Self {
        CoreError::Io(e.to_string())
    }
}

/// Shorthand used throughout the crate.
pub type Result<T> = std::result::Result<T, CoreError>;
