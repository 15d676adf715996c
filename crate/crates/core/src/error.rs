use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {op}: {detail}")]
    Shape { op: &'static str, detail: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("missing file: {}", path.display())]
    MissingFile { path: PathBuf },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("{}:{line}: {msg}", path.display())]
    Parse { path: PathBuf, line: usize, msg: String },

    #[error("{}:{line}: index {index} out of range (n = {n})", path.display())]
    IndexOutOfRange {
        path: PathBuf,
        line: usize,
        index: usize,
        n: usize,
    },

    #[error("{}:{line}: node {node} already listed in {other}", path.display())]
    OverlappingSplits {
        path: PathBuf,
        line: usize,
        node: usize,
        other: String,
    },

    #[error("{}:{line}: manifest says {field} = {expected}, file contents give {found}", path.display())]
    CountMismatch {
        path: PathBuf,
        line: usize,
        field: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("node {node} in the training split has no label")]
    UnlabeledTrainingNode { node: usize },

    #[error("non-finite value at epoch {epoch}: {detail}")]
    NonFinite { epoch: usize, detail: String },

    #[error("checkpoint {}: {msg}", path.display())]
    Checkpoint { path: PathBuf, msg: String },
}

impl Error {
    pub(crate) fn shape(op: &'static str, detail: impl Into<String>) -> Self {
        Error::Shape {
            op,
            detail: detail.into(),
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
