use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Error)]
pub enum FlipError {
    #[error("{what} index {index} out of range (bound {bound})")]
    Index {
        what: &'static str,
        index: usize,
        bound: usize,
    },
    #[error("contract violated: {0}")]
    Contract(String),
    #[error("capacity exceeded: {0}")]
    Capacity(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, FlipError>;

pub(crate) fn contract(msg: impl Into<String>) -> FlipError {
    FlipError::Contract(msg.into())
}

pub(crate) fn config(msg: impl Into<String>) -> FlipError {
    FlipError::Config(msg.into())
}
