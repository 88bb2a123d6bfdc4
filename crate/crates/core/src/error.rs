use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A configuration value violates its domain constraint.
    #[error("invalid {field}: {reason}")]
    InvalidConfig { field: String, reason: String },

    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error(
        "covariance factorization failed after {retries} jitter retries (steps={steps}, tau={tau}, H={hurst})"
    )]
    Factorization {
        steps: usize,
        tau: f64,
        hurst: f64,
        retries: usize,
    },

    #[error("out-of-order absorption: expected step {expected}, got {actual}")]
    OutOfOrder { expected: usize, actual: usize },

    #[error("weighted integrals required but noise carries increments only")]
    MissingWeighted,

    #[error("nonpositive error value {0} in order estimate")]
    NonPositiveError(f64),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidConfig {
            field: field.into(),
            reason: reason.into(),
        }
    }
}
