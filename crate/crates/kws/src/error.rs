use std::io;
use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum KwsError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{}: {detail}", path.display())]
    Format { path: PathBuf, detail: String },
    #[error("{} problem(s) in {}:\n  {}", errors.len(), manifest.display(), errors.join("\n  "))]
    Dataset { manifest: PathBuf, errors: Vec<String>, io: bool },
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] snnkws_core::Error),
}

pub type Result<T> = std::result::Result<T, KwsError>;

impl KwsError {
    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        KwsError::Io { path: path.into(), source }
    }

    pub fn format(path: impl Into<PathBuf>, detail: impl Into<String>) -> Self {
        KwsError::Format { path: path.into(), detail: detail.into() }
    }

    /// Process exit status: 2 for I/O failures, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            KwsError::Io { .. } | KwsError::Dataset { io: true, .. } => 2,
            _ => 1,
        }
    }
}
