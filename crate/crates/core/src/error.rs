use thiserror::Error;

/// Errors produced by the symsub library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SymsubError {
    /// A requested object would exceed a configured size cap.
    #[error("dimension guard exceeded: {what} needs {requested}, cap is {cap}")]
    DimensionGuard {
        what: &'static str,
        requested: u128,
        cap: u128,
    },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("operator is not Hermitian (max deviation {0:e})")]
    NonHermitian(f64),
}

pub type Result<T> = std::result::Result<T, SymsubError>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(SymsubError::InvalidArgument(msg.into()))
}
