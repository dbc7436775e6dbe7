use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid parameters (tree count, subsample size, grid, repeats...).
    #[error("configuration error: {0}")]
    Config(String),

    /// The data itself is unusable, e.g. it contains NaN or infinite values.
    #[error("data error: {0}")]
    Data(String),

    /// A query vector or argument does not fit the model it is applied to.
    #[error("input error: {0}")]
    Input(String),

    #[error("cannot normalize an explanation vector whose entries are all zero")]
    ZeroNorm,

    #[error("parse error at row {row}, column {column}: {message}")]
    Parse {
        row: usize,
        column: usize,
        message: String,
    },

    #[error("structure error: {0}")]
    Structure(String),

    #[error("model format error: {0}")]
    Format(String),

    #[error("unsupported model format version {found} (expected {expected})")]
    Version { found: u32, expected: u32 },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
