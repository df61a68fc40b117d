use std::io;
use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum LabError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] steinhaus_core::Error),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("{}: {message}", path.display())]
    Schema { path: PathBuf, message: String },
    #[error("internal invariant violated: {0}")]
    Internal(String),
}

impl LabError {
    /// Process exit code: 1 usage/input, 2 resource guard, 3 internal.
    pub fn exit_code(&self) -> i32 {
        match self {
            LabError::Core(e) if e.is_resource_guard() => 2,
            LabError::Internal(_) => 3,
            _ => 1,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        LabError::Io { path: path.into(), source }
    }
}
