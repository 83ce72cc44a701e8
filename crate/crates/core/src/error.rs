use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("insufficient sample: {0}")]
    InsufficientSample(String),

    #[error("degenerate sample: {0}")]
    DegenerateSample(String),

    #[error("vocabulary is empty")]
    EmptyVocab,

    #[error("input must be positive, got {0}")]
    NonPositiveInput(f64),

    #[error("value {value} exceeds maximum {max}")]
    OutOfRange { value: f64, max: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("non-finite loss in epoch {epoch} at record {record}")]
    NonFiniteLoss { epoch: usize, record: usize },

    #[error("size mismatch: expected {expected}, found {found}")]
    SizeMismatch { expected: usize, found: usize },

    #[error("word not in vocabulary: {0}")]
    OovWord(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }

    /// Strips any stage wrappers and returns the underlying error.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } => source.root(),
            other => other,
        }
    }

    /// True for failures of the numerical kind (non-finite losses or parameters).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self.root(),
            Error::NonFinite(_) | Error::NonFiniteLoss { .. }
        )
    }
}
