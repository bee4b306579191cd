use thiserror::Error;

#[derive(Debug, Error)]
pub enum GsmError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("input contains non-finite values")]
    NonFinite,
    #[error("enumeration budget exceeded: {needed} > {limit}")]
    BudgetExceeded { needed: f64, limit: f64 },
    #[error("numerical failure: {0}")]
    Numeric(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, GsmError>;

pub(crate) fn invalid(msg: impl Into<String>) -> GsmError {
    GsmError::InvalidArgument(msg.into())
}
