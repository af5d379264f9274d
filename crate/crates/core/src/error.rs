use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parameter `{name}` = {value} is outside {range}")]
    Domain {
        name: &'static str,
        value: f64,
        range: &'static str,
    },

    #[error("matrix {matrix} has negative entry {value} at ({row}, {col})")]
    NegativeEntry {
        matrix: &'static str,
        row: usize,
        col: usize,
        value: f64,
    },

    #[error("column {column} of the transition matrix sums to {sum}, expected 1")]
    ColumnSum { column: usize, sum: f64 },

    #[error("Kraus completeness violated: ||K_A^dag K_A + K_B^dag K_B - I||_F = {deviation:e}")]
    Completeness { deviation: f64 },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("invalid word: {0}")]
    InvalidWord(String),

    #[error("contract violated: {0}")]
    Contract(String),

    /// A computed probability fell outside `[-1e-12, 1 + 1e-12]`.
    #[error("probability {value} outside [0, 1]; inputs are inconsistent")]
    Consistency { value: f64 },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("config: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors raised by a machine or state validator.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Domain { .. }
                | Error::NegativeEntry { .. }
                | Error::ColumnSum { .. }
                | Error::Completeness { .. }
                | Error::Shape(_)
                | Error::InvalidState(_)
        )
    }
}
