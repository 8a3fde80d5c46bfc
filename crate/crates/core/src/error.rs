use thiserror::Error;

use crate::optimizer::DivergenceReport;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("sample index {index} out of range for n = {n}")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("non-finite value: {0}")]
    NonFinite(String),
    #[error("non-finite update at epoch {epoch}, step {step}")]
    NonFiniteUpdate { epoch: usize, step: usize },
    #[error("{0}")]
    Diverged(DivergenceReport),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
