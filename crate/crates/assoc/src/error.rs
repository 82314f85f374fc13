use thiserror::Error;

/// Errors raised by the association library.
#[derive(Debug, Error)]
pub enum AssocError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is not symmetric within tolerance")]
    NotSymmetric,

    #[error("table must be centered or standardized for this operation")]
    NotPreprocessed,

    #[error("table must be standardized for this operation")]
    NotStandardized,

    #[error("column '{0}' has zero variance and cannot be standardized")]
    ZeroVarianceColumn(String),

    #[error("alpha {0} is outside the admissible range (0, 2]")]
    InvalidAlpha(f64),

    #[error("degenerate input: {0}")]
    DegenerateTable(String),

    #[error("too few observations: need at least {needed}, got {found}")]
    TooFewObservations { needed: usize, found: usize },

    #[error("too many observations for exact enumeration: n = {found} exceeds {max}")]
    TooManyObservations { found: usize, max: usize },

    #[error("kernel matrix is not positive semi-definite (min eigenvalue {0:.3e})")]
    NotPsd(f64),

    #[error("invalid k = {k} for a graph over {n} nodes")]
    InvalidK { k: usize, n: usize },

    #[error("invalid test plan: {0}")]
    InvalidPlan(String),

    #[error("correlation {0} is outside [-1, 1]")]
    InvalidCorrelation(f64),

    #[error("covariance matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("internal numerical inconsistency: {0}")]
    NumericalInconsistency(String),
}

pub type Result<T> = std::result::Result<T, AssocError>;
