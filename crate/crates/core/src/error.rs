use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {message}")]
    Format {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("vocabulary is empty after applying min_count {min_count}")]
    EmptyVocabulary { min_count: u64 },

    #[error("corpus is empty")]
    EmptyCorpus,

    #[error("document {doc} has no class label")]
    UnlabeledDocument { doc: usize },

    #[error("corpus has no identity assignments")]
    MissingIdentities,

    #[error("corpus has a single class; at least two are required")]
    SingleClass,

    #[error("expected a binary-labeled corpus, found {0} classes")]
    NotBinary(usize),

    #[error("unknown word `{0}`")]
    UnknownWord(String),

    #[error("unknown sense `{0}`")]
    UnknownSense(String),

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("{0} network has no edges")]
    EmptyNetwork(&'static str),

    #[error("invalid sampling weights: {0}")]
    InvalidWeights(String),

    #[error("correlation undefined: {0}")]
    UndefinedCorrelation(&'static str),

    #[error("linear algebra failure: {0}")]
    Numerical(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, line: usize, message: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            line,
            message: message.into(),
        }
    }
}
