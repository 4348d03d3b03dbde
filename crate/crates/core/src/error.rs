use thiserror::Error;

/// Errors raised by the workbench operations.
///
/// `ConsistencyFailure` is special: it means two independently computed
/// routes to the same mathematical statement disagreed. Everything else is a
/// structural problem with the inputs.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid measure space: {0}")]
    InvalidSpace(String),

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("operator is not self-adjoint (relative residual {residual:.3e})")]
    NotSelfAdjoint { residual: f64 },

    #[error("operator is not positive (smallest eigenvalue {min_eigenvalue:.3e})")]
    NotPositive { min_eigenvalue: f64 },

    #[error("operator is not invertible at the configured rank tolerance")]
    NotInvertible,

    #[error("zero vector where a nonzero vector is required")]
    ZeroVector,

    #[error("operator is not rank-one compatible with the given vector (relative residual {residual:.3e})")]
    NotRankOneCompatible { residual: f64 },

    #[error("function is not measurable with respect to the partition (block {block})")]
    NotMeasurable { block: usize },

    #[error("operator is not a quasi-isometry (relative residual {residual:.3e})")]
    NotQuasiIsometry { residual: f64 },

    #[error("series truncation failed for m = {m}: last term {last_term:.3e} after {terms} terms")]
    TruncationFailure { m: usize, terms: usize, last_term: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("consistency failure in {check}: {detail}")]
    ConsistencyFailure { check: String, detail: String },
}

impl Error {
    pub fn consistency(check: impl Into<String>, detail: impl Into<String>) -> Self {
        Error::ConsistencyFailure {
            check: check.into(),
            detail: detail.into(),
        }
    }

    pub fn is_consistency_failure(&self) -> bool {
        matches!(self, Error::ConsistencyFailure { .. })
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
