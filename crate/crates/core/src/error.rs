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

    #[error("manifest parse error in {path}: {message}")]
    ManifestParse { path: PathBuf, message: String },

    #[error("manifest entry {id:?}: {message}")]
    ManifestEntry { id: String, message: String },

    #[error("duplicate manifest id {0:?}")]
    DuplicateId(String),

    #[error("light field {id:?}: missing view ({s},{t})")]
    MissingView { id: String, s: usize, t: usize },

    #[error("light field {id:?}: {message}")]
    LightField { id: String, message: String },

    #[error("image decode error on {path}: {message}")]
    Image { path: PathBuf, message: String },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("input too small: {0}")]
    TooSmall(String),

    #[error("too few samples: need at least {needed}, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("feature table: {0}")]
    FeatureTable(String),

    #[error("model file: {0}")]
    Model(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
