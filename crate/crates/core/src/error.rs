use alloc::string::String;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("shape mismatch: {left_rows}x{left_cols} vs {right_rows}x{right_cols}")]
    ShapeMismatch {
        left_rows: usize,
        left_cols: usize,
        right_rows: usize,
        right_cols: usize,
    },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("dimension must be at least 1")]
    EmptyDimension,
    #[error("matrix is not Hermitian (residual {residual:e})")]
    NotHermitian { residual: f64 },
    #[error("matrix is not skew-Hermitian (residual {residual:e})")]
    NotSkewHermitian { residual: f64 },
    #[error("eigensolver did not converge")]
    NonConvergence,
    #[error("invalid spec field `{field}`: {reason}")]
    InvalidSpec { field: &'static str, reason: String },
    #[error("invalid permutation: {0}")]
    InvalidPermutation(String),
    #[error("invalid contingency table: {0}")]
    InvalidTable(String),
    #[error("point is not critical (gradient norm {grad_norm:e})")]
    NotCritical { grad_norm: f64 },
    #[error("direction is not normal to the critical submanifold (residual {residual:e})")]
    NotNormal { residual: f64 },
    #[error("direction must have unit norm (norm {norm})")]
    NotUnitNorm { norm: f64 },
    #[error("submanifold has codimension 0")]
    ZeroCodimension,
    #[error("epsilon must be positive and finite, got {0}")]
    InvalidEpsilon(f64),
    #[error("more than {limit} contingency tables")]
    TooManyTables { limit: usize },
    #[error("trial count must be at least 1")]
    ZeroTrials,
    #[error("embedding index range must start at or after the base dimension {base}")]
    EmbeddingRange { base: usize },
    #[error("{0}")]
    InvalidArgument(String),
}
