use thiserror::Error;

/// Errors raised by the fiszkit library.
#[derive(Debug, Error)]
pub enum FiszError {
    #[error("length {0} is not a power of two n = 2^J with J >= 1")]
    NonDyadicLength(usize),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("malformed pyramid: {0}")]
    MalformedPyramid(String),

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl FiszError {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        FiszError::Domain(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        FiszError::Config(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, FiszError>;
