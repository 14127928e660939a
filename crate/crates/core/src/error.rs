use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("index ({row}, {col}) out of range for {n_rows}x{n_cols} matrix")]
    IndexOutOfRange {
        row: usize,
        col: usize,
        n_rows: usize,
        n_cols: usize,
    },

    #[error("invalid structure: {0}")]
    Structure(String),

    #[error("structurally singular: {what} {index} has no entries")]
    StructurallySingular { what: &'static str, index: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("singular matrix: zero pivot in column {column}")]
    SingularMatrix { column: usize },

    #[error("factorization failed at level {level}: {source}")]
    Factorization {
        level: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("recursion exceeded {0} levels")]
    TooManyLevels(usize),

    #[error("invalid option: {0}")]
    InvalidOption(String),

    #[error("unsupported preconditioner file version {0}")]
    UnsupportedVersion(u32),

    #[error("corrupt preconditioner file: {0}")]
    Corrupt(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    IoPlain(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
