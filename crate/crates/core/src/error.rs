use thiserror::Error;

/// Failures reported by state construction, operator algebra and criteria.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Squared norm pushed past the Fock cutoff exceeds the declared budget.
    #[error("truncation loss {loss:.3e} exceeds tolerance {tolerance:.3e}")]
    Truncation { loss: f64, tolerance: f64 },

    /// Cancellation in a closed-form sum destroyed the requested accuracy.
    #[error("precision loss: {0}")]
    Precision(String),

    /// Dense linear algebra requested above the configured size cap.
    #[error("resource limit: {0}")]
    Resource(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}
