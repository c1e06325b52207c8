use thiserror::Error;

pub type Result<T> = std::result::Result<T, BenchError>;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error(transparent)]
    Solver(#[from] stiefel_accel::Error),
    #[error("log-log fit needs at least two distinct abscissae, got {distinct}")]
    DegenerateFit { distinct: usize },
    #[error("invalid experiment: {0}")]
    InvalidSpec(String),
    #[error("malformed results file: {0}")]
    Parse(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
