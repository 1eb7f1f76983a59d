use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the library.
///
/// The variants mirror the failure classes the CLI maps onto exit codes:
/// bad input data, bad configuration, and broken stage chaining.
#[derive(Debug, Error)]
pub enum Error {
    #[error("input error: {0}")]
    Input(String),
    #[error("shape error: {0}")]
    Shape(String),
    #[error("numeric domain error: {0}")]
    Numeric(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("pipeline error: {0}")]
    Pipeline(String),
    #[error("failed to read image {path}: {source}")]
    Image {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        Error::Shape(msg.into())
    }

    pub(crate) fn pipeline(msg: impl Into<String>) -> Self {
        Error::Pipeline(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
