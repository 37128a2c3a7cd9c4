use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid simple type {series}{rank}: {reason}")]
    InvalidAlgebra {
        series: char,
        rank: usize,
        reason: String,
    },

    #[error("rank too large for Verlinde engine: Weyl group exceeds {bound} elements")]
    WeylBoundExceeded { bound: usize },

    #[error("unsupported algebra {0} (affine modules are implemented for A1 only)")]
    UnsupportedAlgebra(String),

    #[error("precision error: {0} (retry with the high-precision mode)")]
    Precision(String),

    #[error("internal consistency error: {0}")]
    InternalConsistency(String),

    #[error("unitarity violation: {0}")]
    UnitarityViolation(String),

    #[error("dimension guard tripped: {what} needs {needed} states, limit is {limit}")]
    DimensionGuard {
        what: String,
        needed: usize,
        limit: usize,
    },

    #[error("insufficient fermion headroom: cutoff {have} but {required} is required")]
    InsufficientHeadroom { have: usize, required: usize },

    #[error("incompatible K-theory classes: {0}")]
    KindMismatch(String),

    #[error("verification failed: {0}")]
    Verification(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
