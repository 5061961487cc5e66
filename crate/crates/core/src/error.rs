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

    #[error("{file}:{line}: {message}")]
    Parse {
        file: String,
        line: usize,
        message: String,
    },

    #[error("duplicate item id {0:?}")]
    DuplicateId(String),

    #[error("unknown class {0:?}")]
    UnknownClass(String),

    #[error("unknown item id {0:?}")]
    UnknownItem(String),

    #[error("self-pair on item {0:?}")]
    SelfPair(String),

    #[error("conflicting labels for pair ({0:?}, {1:?})")]
    ConflictingPair(String, String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("non-finite value {value} at position {position}")]
    NonFinite { value: f64, position: usize },

    #[error("truncated input: {0}")]
    Truncated(String),

    #[error("window {window} does not fit in {width}x{height} image")]
    WindowTooLarge {
        window: u32,
        width: u32,
        height: u32,
    },

    #[error("k = {k} exceeds vector dimension {dim}")]
    KTooLarge { k: usize, dim: usize },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("invalid itemset: {0}")]
    InvalidItemset(String),

    #[error("confidence undefined: antecedent never occurs")]
    UndefinedConfidence,

    #[error("linear system singular after regularization (pivot {pivot} at row {row})")]
    Singular { row: usize, pivot: f64 },

    #[error("class pair ({0}, {1}) does not match model")]
    ClassMismatch(String, String),

    #[error("no model for class pair ({0}, {1})")]
    NoModel(String, String),

    #[error("missing model file {0}")]
    MissingModel(PathBuf),

    #[error("training produced no top-level elements for ({0}, {1})")]
    NoTopElements(String, String),

    #[error("AUC needs both positives and negatives (got {positives} / {negatives})")]
    SingleClass { positives: usize, negatives: usize },

    #[error("invalid config: {0}")]
    Config(String),

    #[error("invalid synthetic spec: {0}")]
    Synthetic(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(file: impl Into<String>, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            file: file.into(),
            line,
            message: message.into(),
        }
    }
}
