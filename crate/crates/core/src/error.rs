use thiserror::Error;

/// Errors raised by the numerical routines in this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("unsupported space: {0}")]
    UnsupportedSpace(String),
    #[error("numeric range: {0}")]
    NumericRange(String),
    #[error("basis is not orthonormal: worst Gram defect {defect:e} at ({row}, {col})")]
    InvalidBasis { defect: f64, row: usize, col: usize },
    #[error("unsupported structure: {0}")]
    UnsupportedStructure(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidInput(msg.into()))
}
