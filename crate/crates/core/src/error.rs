//! Error type shared across the library.

/// Convenience alias used by every fallible function in this crate.
pub type Result<T> = std::result::Result<T, Error>;

/// Failure categories surfaced by the library.
///
/// `Config` covers invalid parameter values caught up front, `Contract`
/// covers violated call preconditions (mismatched lengths, non-contiguous
/// batches, out-of-range statistics), and `InsufficientData` covers inputs
/// that are structurally valid but too sparse to compute the requested
/// quantity.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum Error {
    #[error("invalid config: {0}")]
    Config(String),
    #[error("contract violation: {0}")]
    Contract(String),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
}

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }

    pub fn insufficient(msg: impl Into<String>) -> Self {
        Error::InsufficientData(msg.into())
    }
}
