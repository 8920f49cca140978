use thiserror::Error;

/// Errors produced by the reconstruction toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: {what} (expected {expected}, got {got})")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("collocation matrix is not positive definite (smallest pivot {smallest_pivot:e})")]
    NotPositiveDefinite { smallest_pivot: f64 },

    #[error("quadrature order {order} too low: order-doubling change {change:e} exceeds {tolerance:e}")]
    QuadratureOrder {
        order: usize,
        change: f64,
        tolerance: f64,
    },

    #[error("factorization failed: {0}")]
    Factorization(String),

    #[error("descent diverged: objective increased after {halvings} step halvings at iteration {iteration}")]
    Divergence { iteration: usize, halvings: usize },

    #[error("eigenvalue {value:e} outside [0, 1] for m = {m}")]
    SpectrumOutOfRange { m: usize, value: f64 },

    #[error("provenance mismatch: {0}")]
    Provenance(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("malformed container: {0}")]
    Container(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
