use thiserror::Error;

/// Errors produced by the tensor, space, curvature and profile routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum QchError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("argument count mismatch: tensor takes {expected} arguments, got {got}")]
    ArgumentCount { expected: usize, got: usize },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("entry count {got} does not match dim^rank = {expected}")]
    EntryCount { expected: usize, got: usize },

    #[error("non-finite tensor entry at flat index {0}")]
    NonFinite(usize),

    #[error("matrix is singular or not positive-definite")]
    SingularMetric,

    #[error("complex dimension must be at least 2, got {0}")]
    ComplexDimensionTooSmall(usize),

    #[error("zero vector has no holomorphic sectional curvature")]
    ZeroVector,

    #[error("vector is not unit length: g(X,X) = {0}")]
    NotUnit(f64),

    #[error("Gram system is ill-conditioned (condition number {0:e})")]
    IllConditioned(f64),

    #[error("invalid profile parameter: {0}")]
    InvalidProfileParameter(String),

    #[error("no real root for gamma1: discriminant {discriminant:e} (r0 = {r0}, L = {length})")]
    NoRealRoot { discriminant: f64, r0: f64, length: f64 },

    #[error("no admissible root for gamma1 among {roots:?} (r0 = {r0}, L = {length})")]
    NoAdmissibleRoot { roots: Vec<f64>, r0: f64, length: f64 },

    #[error("t = {t} lies outside the admissible range [{lo}, {hi}]")]
    OutOfRange { t: f64, lo: f64, hi: f64 },

    #[error("failed to parse tensor record: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, QchError>;
