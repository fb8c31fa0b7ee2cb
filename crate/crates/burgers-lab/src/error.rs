//! Error type shared by every module.

use thiserror::Error;

/// Failure modes of the toolkit.
///
/// The variants are grouped so that a command-line front end can map them to
/// exit codes: regime and precondition problems are the caller's fault,
/// numerical failures are the solver's.
#[derive(Debug, Error)]
pub enum Error {
    /// A non-finite or out-of-range input value.
    #[error("domain error: {0}")]
    Domain(String),
    /// An operation was called outside its documented contract.
    #[error("contract violation: {0}")]
    Contract(String),
    /// The hypotheses of the requested construction do not hold.
    #[error("precondition failed: {0}")]
    Precondition(String),
    /// A nonexistence result rules out the requested object.
    #[error("nonexistence: {0}")]
    Nonexistence(String),
    /// No implemented existence result covers the requested parameters.
    #[error("regime not covered: {0}")]
    Unknown(String),
    /// Invalid run configuration detected before any computation.
    #[error("configuration error: {0}")]
    Config(String),
    /// A solver could not complete (step underflow, failed bracket, ...).
    #[error("numerical failure: {0}")]
    Numerical(String),
    /// A truncated-domain quantity has a tail that is not negligible.
    #[error("truncation error: {0}")]
    Truncation(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for errors caused by the request rather than by the numerics.
    pub fn is_regime_or_precondition(&self) -> bool {
        matches!(
            self,
            Error::Domain(_)
                | Error::Contract(_)
                | Error::Precondition(_)
                | Error::Nonexistence(_)
                | Error::Unknown(_)
                | Error::Config(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;

/// Rejects non-finite values with a domain error naming the quantity.
pub(crate) fn ensure_finite(name: &str, value: f64) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} must be finite, got {value}")))
    }
}
