use std::path::{Path, PathBuf};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum HoiError {
    /// A JSON document does not match its schema. `field` is the path of the
    /// offending field, for example `objects[0].mask`.
    #[error("{file}: schema error at `{field}`: {message}")]
    Schema { file: PathBuf, field: String, message: String },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: line {line}: {message}")]
    Format { path: PathBuf, line: usize, message: String },
    #[error("{path}: {message}")]
    Image { path: PathBuf, message: String },
    #[error(transparent)]
    Core(#[from] hoi_core::Error),
}

pub type Result<T, E = HoiError> = std::result::Result<T, E>;

pub(crate) fn io_error(path: &Path) -> impl FnOnce(std::io::Error) -> HoiError + '_ {
    move |source| HoiError::Io { path: path.to_path_buf(), source }
}

pub(crate) fn format_error(path: &Path, line: usize, message: impl Into<String>) -> HoiError {
    HoiError::Format { path: path.to_path_buf(), line, message: message.into() }
}
