use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid data: {0}")]
    InvalidData(String),

    #[error("invalid penalty: {0}")]
    InvalidPenalty(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("non-finite value while evaluating {0}")]
    NonFinite(String),

    #[error("root bracket for coordinate {coordinate} not found after {doublings} doublings (degenerate or separable data?)")]
    Divergence { coordinate: usize, doublings: usize },

    #[error("degenerate path: all penalised scores are zero")]
    DegeneratePath,

    #[error("division by zero: {0}")]
    DivisionByZero(String),

    #[error("parse error at row {row}, column {column}: {message}")]
    Parse {
        row: usize,
        column: String,
        message: String,
    },

    #[error("oracle did not converge within {0} iterations")]
    OracleNotConverged(usize),

    #[error("synthetic generation failed: {0}")]
    Generation(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
