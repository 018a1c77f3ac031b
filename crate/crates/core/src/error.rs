use thiserror::Error;

/// Errors raised by ingestion, warping and the estimation pipelines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("time {t} outside trajectory range [{start}, {end}]")]
    OutOfRange { t: f64, start: f64, end: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("empty event slice")]
    EmptySlice,

    #[error("grid search needs {needed} evaluations, budget is {budget}")]
    BudgetExceeded { needed: usize, budget: usize },

    #[error("corrupt grid file: {0}")]
    CorruptGrid(String),

    #[error("image encoding failed: {0}")]
    Image(#[from] image::ImageError),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
