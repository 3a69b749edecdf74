use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Caller supplied data that violates a precondition.
    #[error("invalid input: {0}")]
    Input(String),

    /// Malformed text input. `location` is a line number or byte offset,
    /// as named in the message.
    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },

    /// A size cap or retry budget was exceeded.
    #[error("resource limit: {0}")]
    Resource(String),

    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub(crate) fn parse_at_line(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            location: format!("line {line}"),
            message: msg.into(),
        }
    }

    pub(crate) fn parse_at_byte(offset: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            location: format!("byte {offset}"),
            message: msg.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
