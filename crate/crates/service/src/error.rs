use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error(transparent)]
    Core(#[from] eurovoc_core::Error),

    #[error("unsupported language `{code}`; valid codes: {valid}")]
    UnsupportedLanguage { code: String, valid: String },

    #[error("no model registered for language `{0}`")]
    NotRegistered(String),

    #[error("missing file {0}")]
    MissingFile(PathBuf),

    #[error("checksum mismatch for `{language}`: manifest has {expected}, files hash to {actual}")]
    ChecksumMismatch {
        language: String,
        expected: String,
        actual: String,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("invalid registry manifest: {0}")]
    Manifest(String),

    #[error("text is empty")]
    EmptyText,

    #[error("num_labels = {requested} but the model has {available} labels")]
    TooManyLabels { requested: usize, available: usize },

    #[error("num_labels must be at least 1")]
    ZeroLabels,

    #[error("invalid benchmark length {length}: must lie in 2..={max}")]
    InvalidLength { length: usize, max: usize },

    #[error("trials must be at least 1")]
    NoTrials,

    #[error("the vocabulary has no whole-word token to build benchmark text from")]
    NoBenchmarkWords,

    #[error("model bundle is inconsistent: {0}")]
    Bundle(String),
}

pub type Result<T, E = ServiceError> = std::result::Result<T, E>;

impl ServiceError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        ServiceError::Io {
            path: path.into(),
            source,
        }
    }
}
