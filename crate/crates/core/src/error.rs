use thiserror::Error;

/// Errors produced by the numerical routines in this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A Cholesky pivot fell at or below the definiteness threshold.
    #[error("matrix is not positive definite (pivot {pivot:e} at index {index})")]
    NotPositiveDefinite { index: usize, pivot: f64 },

    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("domain error: {0}")]
    Domain(String),

    /// The integer-matrix search did not produce a usable basis.
    #[error("integer matrix search failed: {0}")]
    SearchFailure(String),

    /// An enumeration exceeded its vector budget. `partial` holds the bound
    /// accumulated before the budget ran out.
    #[error("enumeration budget of {limit} vectors exceeded")]
    Resource { limit: usize, partial: Option<f64> },

    #[error("result is not finite: {0}")]
    NonFinite(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

pub(crate) fn shape(msg: impl Into<String>) -> Error {
    Error::Shape(msg.into())
}
