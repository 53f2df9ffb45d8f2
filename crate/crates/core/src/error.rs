use thiserror::Error;

/// Errors produced anywhere in the workbench.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    /// Malformed input: unknown symbols, bad indices, inconsistent shapes.
    #[error("structural error: {0}")]
    Structural(String),

    /// An omission descriptor or hook family that the model does not allow.
    #[error("model error: {0}")]
    Model(String),

    /// Invalid or incompatible configuration.
    #[error("config error: {0}")]
    Config(String),

    /// An internal consistency check failed (e.g. a derived step disagrees
    /// with the transition table, or duplicate identifiers were observed).
    #[error("integrity error: {0}")]
    Integrity(String),

    /// A bounded search ran out of budget before reaching an answer.
    #[error("exceeds cap: {what} not resolved within {cap} steps")]
    ExceedsCap { what: String, cap: usize },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn structural(msg: impl Into<String>) -> Error {
    Error::Structural(msg.into())
}

pub(crate) fn config(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

pub(crate) fn integrity(msg: impl Into<String>) -> Error {
    Error::Integrity(msg.into())
}
