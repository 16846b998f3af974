//! Crate-wide error type.

use std::path::PathBuf;

/// Errors produced by the toolkit.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid geometry: {0}")]
    Geometry(String),

    #[error("invalid data: {0}")]
    Data(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("dimension mismatch: {0:?} vs {1:?}")]
    DimMismatch([usize; 3], [usize; 3]),

    #[error("singular affine transform (|det| = {0:e})")]
    SingularAffine(f64),

    #[error("mask resampling requires nearest-neighbour interpolation")]
    MaskInterpolation,

    #[error("format error: {0}")]
    Format(String),

    #[error("unsupported datatype code {0}")]
    UnsupportedDatatype(i16),

    #[error("manifest error: {0}")]
    Manifest(String),

    #[error("style backend failed on slice {slice}: {message}")]
    Backend { slice: usize, message: String },

    #[error("style backend protocol violation: {0}")]
    Protocol(String),

    #[error("statistics error: {0}")]
    Stats(String),

    #[error("not found: {0}")]
    NotFound(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("image encoding failed: {0}")]
    Image(String),
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
