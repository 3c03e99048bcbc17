use std::path::{Path, PathBuf};

use crate::checkpoint::CheckpointError;
use crate::npy::NpyError;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Core(#[from] sre_core::Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("dataset not found: {0}")]
    DatasetNotFound(PathBuf),
    #[error("{member}: {source}")]
    Npy {
        member: String,
        #[source]
        source: NpyError,
    },
    #[error("zip archive: {0}")]
    Zip(String),
    #[error("dataset archive lacks key {0:?}")]
    MissingKey(String),
    #[error("dataset: {0}")]
    Data(String),
    #[error(transparent)]
    Checkpoint(#[from] CheckpointError),
    #[error("checkpoint does not match the data: {0}")]
    ConfigMismatch(String),
    #[error("configuration: {0}")]
    Config(String),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{0}")]
    Usage(String),
}

impl From<NpyError> for Error {
    fn from(source: NpyError) -> Self {
        Error::Npy {
            member: String::new(),
            source,
        }
    }
}

impl Error {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        Error::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    /// Stable machine-readable tag used in error reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Core(e) => match e {
                sre_core::Error::Shape(_) => "shape",
                sre_core::Error::InvalidKernelSize(_) => "invalid-kernel-size",
                sre_core::Error::UnsupportedProtocol(_) => "unsupported-protocol",
                sre_core::Error::EmptyDataset => "empty-dataset",
                sre_core::Error::Config(_) => "config",
                _ => "numeric",
            },
            Error::Io { .. } => "io",
            Error::DatasetNotFound(_) => "dataset-not-found",
            Error::Npy { .. } => "npy",
            Error::Zip(_) => "zip",
            Error::MissingKey(_) => "missing-key",
            Error::Data(_) => "dataset",
            Error::Checkpoint(_) => "checkpoint",
            Error::ConfigMismatch(_) => "config-mismatch",
            Error::Config(_) => "config",
            Error::Json(_) => "json",
            Error::Usage(_) => "usage",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
