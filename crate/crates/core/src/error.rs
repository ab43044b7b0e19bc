use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, HetError>;

#[derive(Debug, Error)]
pub enum HetError {
    #[error("invalid dimensions: {0}")]
    Dimension(String),

    #[error("out of bounds: {0}")]
    Bounds(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("no in-bounds candidate within the search radius around ({x}, {y})")]
    SearchDomain { x: i32, y: i32 },

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("track lost at frame {frame}")]
    TrackLost { frame: usize },

    #[error("initialization failed: {0}")]
    Init(String),

    #[error("generation failed: {0}")]
    Generation(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Decode { path: PathBuf, message: String },
}

impl HetError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        HetError::Io {
            path: path.into(),
            source,
        }
    }
}
