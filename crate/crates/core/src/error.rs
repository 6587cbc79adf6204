use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter violates its bounds. `field` is the parameter name as it
    /// appears in the configuration (and as the CLI flag).
    #[error("invalid {field}: {message}")]
    Config { field: String, message: String },

    #[error("unstable RC filter: dt/(RC) = {ratio} exceeds 1")]
    Stability { ratio: f64 },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: row {row}: {message}")]
    Parse {
        path: PathBuf,
        row: usize,
        message: String,
    },

    #[error("internal invariant violated: {0}")]
    Internal(String),
}

impl Error {
    pub fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by the caller's parameters rather than the
    /// environment.
    pub fn is_config(&self) -> bool {
        matches!(self, Error::Config { .. } | Error::Stability { .. })
    }
}

pub(crate) fn csv_err(path: &std::path::Path, err: csv::Error) -> Error {
    let row = err
        .position()
        .map(|p| p.record() as usize)
        .unwrap_or_default();
    match err.into_kind() {
        csv::ErrorKind::Io(e) => Error::io(path, e),
        other => Error::Parse {
            path: path.to_path_buf(),
            row,
            message: format!("{other:?}"),
        },
    }
}
