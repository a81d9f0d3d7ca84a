//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("operands use different kernels")]
    KernelMismatch,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("linear algebra failure: {0}")]
    Linalg(String),

    #[error("training diverged at iteration {iteration}")]
    Diverged { iteration: usize },

    #[error("idx format error at byte offset {offset}: {reason}")]
    IdxFormat { offset: usize, reason: String },

    #[error("not enough samples of digit {digit}: have {have}, need {need}")]
    InsufficientClass { digit: u8, have: usize, need: usize },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<ndarray_linalg::error::LinalgError> for Error {
    fn from(e: ndarray_linalg::error::LinalgError) -> Self {
        Error::Linalg(e.to_string())
    }
}
