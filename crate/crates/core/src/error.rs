use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error("initialization failed after {attempts} attempts: {reason}")]
    Initialization { attempts: usize, reason: String },
    #[error("solver failure: {0}")]
    Solver(String),
    #[error(transparent)]
    Conic(#[from] irs_conic::ConicError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
