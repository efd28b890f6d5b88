use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("out of scope: {0}")]
    OutOfScope(String),

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("model file: {0}")]
    ModelFormat(String),

    #[error("architecture mismatch: expected {expected}, found {found}")]
    ArchitectureMismatch { expected: String, found: String },

    #[error("no sea-surface reference: {0}")]
    NoReference(String),

    #[error("replica consistency: {0}")]
    Consistency(String),

    #[error("chunk {chunk} failed: {message}")]
    Job { chunk: usize, message: String },

    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn file(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::File {
            path: path.into(),
            source,
        }
    }

    /// True when the error stems from a missing input file.
    pub fn is_missing_input(&self) -> bool {
        match self {
            Error::File { source, .. } | Error::Io(source) => {
                source.kind() == std::io::ErrorKind::NotFound
            }
            _ => false,
        }
    }

    /// True for errors caused by bad user data rather than by the program.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidInput(_)
                | Error::OutOfScope(_)
                | Error::Parse(_)
                | Error::ModelFormat(_)
                | Error::ArchitectureMismatch { .. }
                | Error::NoReference(_)
                | Error::Csv(_)
        )
    }
}
