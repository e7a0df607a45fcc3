//! Error type shared by the whole crate.

use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    /// A caller-supplied value violates a precondition.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A configuration is structurally unusable for the requested operation
    /// (e.g. a threshold placed where a closed-form estimator is undefined).
    #[error("invalid configuration: {0}")]
    InvalidConfiguration(String),

    /// A numerical solve could not complete (no bracket, no root, overflow).
    #[error("numeric failure: {0}")]
    NumericFailure(String),

    /// A data file violates the expected format. `line` is 1-based.
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn numeric(msg: impl Into<String>) -> Self {
        Error::NumericFailure(msg.into())
    }
}
