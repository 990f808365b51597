use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// The document does not follow the interchange schema.
    #[error("schema violation: {0}")]
    Schema(String),

    /// Cycles, orphans, dangling child references and similar tree defects.
    #[error("invalid tree structure: {0}")]
    Structure(String),

    #[error("feature index {feature} out of range for {n_features} features (node {node})")]
    FeatureOutOfRange {
        node: usize,
        feature: usize,
        n_features: usize,
    },

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("index {index} out of range (len {len})")]
    IndexOutOfRange { index: usize, len: usize },

    /// A root-to-leaf path whose constraints on one feature cannot all hold.
    #[error("empty interval on feature {feature} for path to leaf {leaf}")]
    EmptyInterval { leaf: usize, feature: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("statistics: {0}")]
    Stats(String),

    #[error("missing input file {}", .0.display())]
    MissingFile(PathBuf),

    #[error("I/O error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors that come from the filesystem rather than bad input.
    pub fn is_io(&self) -> bool {
        match self {
            Error::Io { .. } | Error::MissingFile(_) => true,
            Error::Csv(e) => matches!(e.kind(), csv::ErrorKind::Io(_)),
            _ => false,
        }
    }
}
