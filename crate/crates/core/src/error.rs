use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the core crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("unknown descriptor `{0}`")]
    UnknownDescriptor(String),

    #[error("unsupported language `{code}` (supported: {supported})")]
    UnsupportedLanguage { code: String, supported: String },

    #[error("duplicate document id `{0}`")]
    DuplicateDocument(String),

    #[error("document `{0}` has no labels")]
    MissingLabels(String),

    #[error("empty corpus")]
    EmptyCorpus,

    #[error("empty model")]
    EmptyModel,

    #[error("empty split: {0}")]
    EmptySplit(String),

    #[error("invalid split ratios: {0}")]
    InvalidRatios(String),

    #[error("duplicate seed {0}")]
    DuplicateSeed(u64),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("k = {k} outside the valid range 1..={max}")]
    KOutOfRange { k: usize, max: usize },

    #[error("step {step} outside the schedule range 0..={total}")]
    StepOutOfRange { step: usize, total: usize },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("training diverged at epoch {epoch}: loss is not finite")]
    Divergence { epoch: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("mismatched inputs: {0}")]
    Mismatch(String),

    #[error("checkpoint format error: {0}")]
    Checkpoint(String),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
