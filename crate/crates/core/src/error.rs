use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PpwError {
    #[error("argument out of range: {0}")]
    Range(String),

    #[error("numerical failure: {0}")]
    Numeric(String),

    #[error("contract violated: {0}")]
    Contract(String),

    #[error("no comparison ball exists: target {target} is not above the infinite-ball limit {limit}")]
    NoSolution { target: f64, limit: f64 },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for PpwError {
    fn from(e: std::io::Error) -> Self {
        PpwError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, PpwError>;
