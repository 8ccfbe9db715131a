use thiserror::Error;

/// Errors raised by the library.
///
/// Infeasibility of a risk specification is *not* an error; scalarizations
/// and set algorithms report it as a regular outcome.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Input violates a documented invariant.
    #[error("validation error: {0}")]
    Validation(String),

    /// Operation is undefined outside the nonnegative orthant.
    #[error("domain error: {0}")]
    Domain(String),

    /// Requested size exceeds what the solver supports.
    #[error("capacity exceeded: {0}")]
    Capacity(String),

    /// Internal failure of a solver kernel.
    #[error("solver error: {message} (after {iterations} iterations)")]
    Solver { message: String, iterations: usize },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn validation<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Validation(msg.into()))
}
