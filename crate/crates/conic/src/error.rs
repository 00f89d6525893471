use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConicError {
    #[error("expression references variable {index} but the program has {count}")]
    UnknownVariable { index: usize, count: usize },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("cone of dimension zero")]
    EmptyCone,
    #[error("matrix is not Hermitian (max asymmetry {0:e})")]
    NotHermitian(f64),
    #[error("non-finite data in program")]
    NonFinite,
}
