use thiserror::Error;

/// Errors raised by the exact, numeric and simulation layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("collision order must be at least 2, got {0}")]
    InvalidOrder(usize),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// The requested waiting time is almost surely infinite.
    #[error("invalid query: {0}")]
    InvalidQuery(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("{what} = {value} is out of range (maximum {max})")]
    OutOfRange { what: &'static str, value: usize, max: usize },

    #[error("resource limit exceeded: {0}")]
    Resource(String),

    #[error("numeric failure: {message} (estimate {estimate:e}, achieved error {achieved:e})")]
    Numeric { message: String, estimate: f64, achieved: f64 },
}

impl Error {
    /// True for errors caused by the request itself rather than by numeric or resource limits.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidOrder(_)
                | Error::InvalidConfig(_)
                | Error::InvalidQuery(_)
                | Error::Domain(_)
                | Error::OutOfRange { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
