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

    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },

    #[error("symbol {symbol:?} is not in the alphabet")]
    UnknownSymbol { symbol: String },

    #[error("symbol index {index} out of range for alphabet of size {size}")]
    IndexOutOfRange { index: usize, size: usize },

    #[error("duplicate word {word:?}")]
    DuplicateWord { word: String },

    #[error("vocabulary is empty")]
    EmptyVocabulary,

    #[error("invalid alphabet: {0}")]
    InvalidAlphabet(String),

    #[error("count overflow in {0}")]
    Overflow(&'static str),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("alphabet mismatch between {left:?} and {right:?}")]
    AlphabetMismatch { left: String, right: String },

    #[error("model {label:?} has pending words; call finalize() before querying")]
    StaleModel { label: String },

    #[error("unsupported model format_version {found} (expected {expected})")]
    Version { found: u32, expected: u32 },

    #[error("model checksum mismatch (stored {stored}, computed {computed})")]
    Checksum { stored: String, computed: String },

    #[error("model is inconsistent: {0}")]
    Inconsistent(String),

    #[error("malformed model file: {0}")]
    ModelFormat(String),

    #[error("enumeration budget exceeded: {needed} > {budget}")]
    Budget { needed: u128, budget: u128 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("could not draw {wanted} distinct words after {attempts} attempts")]
    Exhausted { wanted: usize, attempts: usize },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
