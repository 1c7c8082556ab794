use thiserror::Error;

/// Errors raised by the analytic, planning and simulation routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of the function.
    #[error("domain error: {0}")]
    Domain(String),
    /// Parameters are individually valid but cannot be combined.
    #[error("configuration error: {0}")]
    Config(String),
    /// The exact oracle was asked to convolve a distribution that is too large.
    #[error("capacity exceeded: support size {size} > limit {limit}")]
    Capacity { size: usize, limit: usize },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
