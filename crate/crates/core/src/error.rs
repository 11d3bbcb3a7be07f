use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("layout error in block `{block}`: {reason}")]
    Layout { block: String, reason: String },

    #[error("invalid symmetry spec: {0}")]
    Spec(String),

    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    Dimension {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("transform belongs to a different symmetry spec")]
    SpecMismatch,

    #[error("unknown environment id `{0}`")]
    UnknownEnv(String),

    #[error("unknown variant `{0}`")]
    UnknownVariant(String),

    #[error("unknown policy kind `{0}`")]
    UnknownPolicyKind(String),

    #[error("invalid config field `{field}`: {reason}")]
    Config { field: String, reason: String },

    #[error("missing weight for reward term `{0}`")]
    MissingWeight(String),

    #[error("empty batch")]
    EmptyBatch,

    #[error("non-finite value in {context}: {detail}")]
    NonFinite { context: &'static str, detail: String },

    #[error("critic is in V mode; Q evaluation requires a Q-mode critic")]
    CriticMode,

    #[error("tape does not match network: {0}")]
    TapeMismatch(String),

    #[error("{path}: {reason}")]
    Format { path: PathBuf, reason: String },

    #[error("{0}")]
    Unsupported(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn layout(block: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Layout {
            block: block.into(),
            reason: reason.into(),
        }
    }

    pub fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, reason: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            reason: reason.into(),
        }
    }
}
