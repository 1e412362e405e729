//! Error taxonomy shared by every module in the crate.
//!
//! Variants are grouped by the phase that can produce them: I/O and file
//! decoding (`Io`, `Data`), tensor/layer plumbing (`Shape`), numeric health
//! (`Numerics`) and user-supplied configuration (`Config`).

use std::path::PathBuf;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// All failure modes surfaced by the benchmark core.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Operating-system level I/O failure, annotated with the path involved.
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// Malformed or inconsistent input data (EDF/CSV/cache/manifest contents).
    #[error("data error: {0}")]
    Data(String),

    /// Dimension mismatch between tensors, layers or frames.
    #[error("shape error: {0}")]
    Shape(String),

    /// Non-finite values or numeric divergence detected at runtime.
    #[error("numerics error: {0}")]
    Numerics(String),

    /// Invalid experiment configuration or incompatible option combination.
    #[error("config error: {0}")]
    Config(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn data(msg: impl Into<String>) -> Self {
        Error::Data(msg.into())
    }

    pub fn shape(msg: impl Into<String>) -> Self {
        Error::Shape(msg.into())
    }

    pub fn numerics(msg: impl Into<String>) -> Self {
        Error::Numerics(msg.into())
    }

    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
