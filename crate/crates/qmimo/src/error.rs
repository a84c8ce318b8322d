//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by configuration validation and numeric evaluation.
#[derive(Debug, Error)]
pub enum Error {
    /// An invalid configuration field; the message names the field.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// A quantity left the numeric range where the evaluators are reliable
    /// (for example a series argument that would overflow).
    #[error("numeric range: {0}")]
    NumericRange(String),

    /// I/O failure while reading or writing files.
    #[error(transparent)]
    Io(#[from] std::io::Error),

    /// Malformed JSON in a configuration file.
    #[error("config parse: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code associated with this error kind.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Json(_) => 1,
            Error::NumericRange(_) => 2,
            Error::Io(_) => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
