use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: non-UTF-8 content at line {line}")]
    NonUtf8 { path: PathBuf, line: usize },

    #[error("{path}: empty sentence at line {line}")]
    EmptySentence { path: PathBuf, line: usize },

    #[error("{0}: corpus is empty")]
    EmptyCorpus(String),

    #[error("cannot sample {requested} sentences from a corpus of {available}")]
    SampleTooLarge { requested: usize, available: usize },

    #[error("ARPA parse error in {section} (line {line}): {message}")]
    Arpa {
        section: String,
        line: usize,
        message: String,
    },

    #[error("alignment error at line {line}: {message}")]
    Alignment { line: usize, message: String },

    #[error("schedule file: {0}")]
    Schedule(String),

    #[error("length mismatch: {what} ({left} vs {right})")]
    LengthMismatch {
        what: &'static str,
        left: usize,
        right: usize,
    },

    #[error("distributions are defined over different vocabularies")]
    VocabularyMismatch,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("config error in `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("{role} input {path} differs from the checksum recorded in the manifest")]
    InputChanged { role: String, path: PathBuf },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }

    /// Whether the error stems from user-supplied parameters rather than data.
    pub fn is_config_error(&self) -> bool {
        matches!(self, Error::Config { .. } | Error::InvalidArgument(_))
    }
}
