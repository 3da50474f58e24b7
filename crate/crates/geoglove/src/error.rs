use std::path::PathBuf;

use thiserror::Error;

/// Crate-wide error type. Variants map one-to-one onto the failure modes of
/// the pipeline stages; the binary translates them into process exit codes.
#[derive(Debug, Error)]
pub enum Error {
    #[error("duplicate document id `{0}`")]
    DuplicateDocumentId(String),

    #[error("vocabulary is empty (no word meets the min-count threshold)")]
    EmptyVocabulary,

    #[error("non-finite loss during training at epoch {epoch}")]
    NonFiniteLoss { epoch: usize },

    #[error("non-finite value produced by {0}")]
    NonFiniteValue(String),

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: String,
        line: u64,
        msg: String,
    },

    #[error("{path}:{line}: coordinate out of range: {msg}")]
    Range {
        path: String,
        line: u64,
        msg: String,
    },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("mine list is empty")]
    EmptyMineSet,

    #[error("no error rows to aggregate")]
    EmptyRows,

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("model kind mismatch: expected `{expected}`, file holds `{found}`")]
    KindMismatch { expected: String, found: String },

    #[error("zero-norm vector for `{0}`")]
    ZeroVector(String),

    #[error("keyword `{keyword}` is not in the embedding vocabulary{}",
            if suggestions.is_empty() { String::new() }
            else { format!(" (nearest: {})", suggestions.join(", ")) })]
    UnknownKeyword {
        keyword: String,
        suggestions: Vec<String>,
    },

    #[error("missing stage artifact: {}", .0.display())]
    MissingArtifact(PathBuf),

    #[error("eigensolver did not converge")]
    NoConvergence,

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
