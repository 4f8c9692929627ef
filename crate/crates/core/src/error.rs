use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("grid construction failed at layer {layer}: {reason}")]
    Construction { layer: usize, reason: String },

    #[error("inadmissible state at layer {layer}, cell {cell}: {value}")]
    Inadmissible { layer: usize, cell: usize, value: String },

    #[error("incompatible: {0}")]
    Incompatible(String),

    #[error("test-function support violation: {0}")]
    Support(String),

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },

    #[error("internal error: {0}")]
    Internal(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}
