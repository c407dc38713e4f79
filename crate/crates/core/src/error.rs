use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the analysis toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("cannot decode audio {path}: {message}")]
    Audio { path: PathBuf, message: String },

    #[error("unsupported audio encoding in {path}: {message}")]
    UnsupportedEncoding { path: PathBuf, message: String },

    #[error("audio file {0} contains no samples")]
    EmptyAudio(PathBuf),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("clip too short: {0}")]
    ClipTooShort(String),

    #[error("annotation file {path}: {message}")]
    Annotation { path: PathBuf, message: String },

    #[error("feature set mismatch: {left} vs {right}")]
    FeatureSetMismatch { left: String, right: String },

    #[error("no features stored for clip {0}")]
    MissingFeatures(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("degenerate data: {0}")]
    Degenerate(String),

    #[error("cosine similarity undefined for zero-norm activity vector")]
    ZeroNormActivity,

    #[error("manifest is invalid:\n{}", .0.join("\n"))]
    Manifest(Vec<String>),

    #[error("stage {stage} is missing its dependency: {dependency}")]
    MissingDependency { stage: String, dependency: String },

    #[error("stage {stage} failed on clip {clip}: {message}")]
    Stage {
        stage: String,
        clip: String,
        message: String,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
