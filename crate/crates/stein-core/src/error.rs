//! Error type shared across the crate.

use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum SteinError {
    /// A caller-supplied value violates a documented precondition.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A computation produced or encountered NaN/Inf where finite values are
    /// required.
    #[error("non-finite value: {0}")]
    NonFinite(String),

    /// An iterative numerical procedure failed to converge or otherwise broke
    /// down.
    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    /// The target lacks a capability the operation needs, e.g. exact
    /// sampling.
    #[error("unsupported capability: {0}")]
    Unsupported(String),

    /// A data file could not be parsed.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, SteinError>;

impl SteinError {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        SteinError::InvalidArgument(msg.into())
    }
}
