use thiserror::Error;

/// Errors raised by the core library.
///
/// `Validation` and `Precondition` carry the name of the violated invariant so
/// front ends can report it verbatim.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("shape error: {0}")]
    Shape(String),

    #[error("size limit exceeded: {requested} > {limit}")]
    SizeLimit { requested: usize, limit: usize },

    #[error("invariant `{invariant}` violated: {detail}")]
    Validation { invariant: &'static str, detail: String },

    #[error("matrix is not positive semidefinite (min eigenvalue {min_eigenvalue:e})")]
    NotPsd { min_eigenvalue: f64 },

    #[error("outcome `{outcome}` has probability {probability:e}; conditional state undefined")]
    ZeroProbability { outcome: String, probability: f64 },

    #[error("conditional undefined on supported column {column}")]
    Support { column: usize },

    #[error("precondition `{condition}` not met: {detail}")]
    Precondition { condition: &'static str, detail: String },

    #[error("unsupported structure: {0}")]
    Unsupported(String),
}

impl Error {
    pub(crate) fn validation(invariant: &'static str, detail: impl Into<String>) -> Self {
        Error::Validation {
            invariant,
            detail: detail.into(),
        }
    }

    pub(crate) fn precondition(condition: &'static str, detail: impl Into<String>) -> Self {
        Error::Precondition {
            condition,
            detail: detail.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
