//! Configuration parsing, bundled reference data, report emission and
//! comparison against the reference measurements.

pub mod compare;
pub mod config;
pub mod emit;
pub mod format;
pub mod manifest;
pub mod reference;

use std::path::{Path, PathBuf};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("output directory {0} is not empty (pass --force to overwrite)")]
    WouldOverwrite(PathBuf),
    #[error("{path} exists and is not a directory")]
    NotADirectory { path: PathBuf },
}

impl IoError {
    pub(crate) fn file(path: &Path) -> impl FnOnce(std::io::Error) -> IoError + '_ {
        move |source| IoError::File {
            path: path.to_path_buf(),
            source,
        }
    }
}

/// Writes `contents` to `path`, attaching the path to any failure.
pub fn write_file(path: &Path, contents: &str) -> Result<(), IoError> {
    std::fs::write(path, contents).map_err(IoError::file(path))
}

/// Reads `path` as UTF-8 text, attaching the path to any failure.
pub fn read_file(path: &Path) -> Result<String, IoError> {
    std::fs::read_to_string(path).map_err(IoError::file(path))
}
