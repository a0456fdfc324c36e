use thiserror::Error;

/// Errors produced by the library and the CLI front end.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument violates a precondition (bad simplex vector, zero dimension, ...).
    #[error("validation error: {0}")]
    Validation(String),
    /// A bound formula was evaluated outside the region where it is defined.
    #[error("domain error: {0}")]
    Domain(String),
    /// An exact computation would exceed the configured work limit.
    #[error("capacity error: {0}")]
    Capacity(String),
    /// Config text could not be tokenized.
    #[error("syntax error at line {line}: {message}")]
    Syntax { line: usize, message: String },
    /// One or more config fields are invalid; each entry names the field path.
    #[error("config error: {}", .0.join("; "))]
    Config(Vec<String>),
    /// The request is well formed but cannot be served (e.g. plot data for a task without a curve).
    #[error("usage error: {0}")]
    Usage(String),
    #[error("io error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
