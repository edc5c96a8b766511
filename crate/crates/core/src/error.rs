use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid label {0}: labels must be exactly -1 or +1")]
    InvalidLabel(f64),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("dataset must have at least one row and one column")]
    Empty,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("separation LP failed: {0}")]
    SeparationSolver(String),

    #[error("bracket expansion failed: {0}")]
    Bracket(String),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
