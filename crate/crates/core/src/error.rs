use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error in {op}: {msg}")]
    Domain { op: &'static str, msg: String },

    /// A caller-supplied input does not satisfy a documented precondition.
    #[error("precondition violated in {op}: {msg}")]
    Precondition { op: &'static str, msg: String },

    /// Segments or twin pairs arrived out of order or with gaps.
    #[error("stream integrity: {0}")]
    StreamIntegrity(String),

    #[error("{op} did not converge within {terms} terms")]
    Convergence { op: &'static str, terms: usize },

    /// Least-squares design matrix is rank deficient.
    #[error("degenerate design: {0}")]
    Degenerate(String),

    #[error("checkpoint {path}: {kind}")]
    Checkpoint { path: PathBuf, kind: CheckpointError },

    /// A command needs an output of an earlier run that is not present.
    #[error("missing dependency {path}: {hint}")]
    MissingInput { path: PathBuf, hint: String },

    #[error("malformed input {path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CheckpointError {
    #[error("bad magic, not a checkpoint file")]
    BadMagic,
    #[error("format version {found} is not supported (expected {expected})")]
    Version { found: u32, expected: u32 },
    /// The trailer is absent (truncated file) or does not match the payload.
    #[error("checksum failure (stored {}, computed {computed:08x})", stored.map_or("none".to_string(), |s| format!("{s:08x}")))]
    Checksum { stored: Option<u32>, computed: u32 },
    #[error("malformed payload: {0}")]
    Malformed(String),
}

impl Error {
    pub(crate) fn domain(op: &'static str, msg: impl Into<String>) -> Self {
        Error::Domain {
            op,
            msg: msg.into(),
        }
    }

    pub(crate) fn precondition(op: &'static str, msg: impl Into<String>) -> Self {
        Error::Precondition {
            op,
            msg: msg.into(),
        }
    }

    /// True for failures that indicate a numerical problem rather than bad
    /// input or I/O.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::Convergence { .. } | Error::StreamIntegrity(_) | Error::Degenerate(_)
        )
    }
}
