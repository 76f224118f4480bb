use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("I/O error: {0}")]
    Stream(#[from] io::Error),

    #[error("invalid UTF-8 at byte offset {offset}")]
    Decode { offset: u64 },

    #[error("empty vocabulary: no tokens survived preprocessing and the min-count threshold")]
    EmptyVocabulary,

    #[error("empty token stream")]
    EmptyStream,

    #[error("format error at line {line}: {message}")]
    Format { line: usize, message: String },

    #[error("duplicate entry '{word}' at line {line}")]
    DuplicateEntry { word: String, line: usize },

    #[error("unknown word '{0}'")]
    UnknownWord(String),

    #[error("no representation available for '{0}'")]
    RepresentationUnavailable(String),

    #[error("degenerate zero-norm vector for '{0}'")]
    DegenerateVector(String),

    #[error("dimension mismatch {0} vs {1}")]
    DimensionMismatch(usize, usize),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("undefined correlation: {0}")]
    UndefinedCorrelation(String),

    #[error("linear algebra failure: {0}")]
    Numerical(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(line: usize, message: impl Into<String>) -> Self {
        Error::Format {
            line,
            message: message.into(),
        }
    }

    pub(crate) fn parameter(message: impl Into<String>) -> Self {
        Error::Parameter(message.into())
    }
}
