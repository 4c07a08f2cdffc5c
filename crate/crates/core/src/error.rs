use thiserror::Error;

/// Errors produced by the analysis pipeline.
///
/// Insufficient data and not-in-subshift are kept apart on purpose: the first
/// means "give me a longer prefix", the second means the input cannot be an
/// approximation of a point of the subshift at all.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("resource limit: {what} needs {required} letters but the cap is {cap}")]
    ResourceLimit {
        what: String,
        required: u128,
        cap: usize,
    },

    #[error("insufficient data: {what} needs a prefix of length {required}, got {available}")]
    InsufficientData {
        what: String,
        required: u128,
        available: usize,
    },

    #[error("not in subshift: {0}")]
    NotInSubshift(String),

    #[error("insufficient precision: {0}")]
    InsufficientPrecision(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn short(what: impl Into<String>, required: u128, available: usize) -> Self {
        Error::InsufficientData {
            what: what.into(),
            required,
            available,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
