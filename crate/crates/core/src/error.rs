//! Crate-wide error type.

use thiserror::Error;

/// Errors surfaced by library operations.
///
/// The split mirrors how callers must react: `Validation`/`Usage`/`Domain`/
/// `Unsupported` mean the input is wrong for the requested operation, while
/// `Resource` means the computation was abandoned against a configured budget
/// (possibly with partial results attached by the operation that raised it).
#[derive(Debug, Error)]
pub enum Error {
    /// Structurally invalid data: dimension mismatches, broken invariants.
    #[error("validation error: {0}")]
    Validation(String),

    /// Two values that must share a context (algebra, system) do not.
    #[error("usage error: {0}")]
    Usage(String),

    /// Input outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The operation is only defined for a restricted input pattern.
    #[error("unsupported pattern: {0}")]
    Unsupported(String),

    /// A configured budget (entries, iterations) was exhausted.
    /// `partial` carries whatever prefix of the answer was computed.
    #[error("resource limit exceeded: {message}")]
    Resource { message: String, partial: Vec<f64> },
}

impl Error {
    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }
    pub(crate) fn usage(msg: impl Into<String>) -> Self {
        Error::Usage(msg.into())
    }
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
