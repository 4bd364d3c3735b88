use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the estimation pipeline.
#[derive(Debug, Error)]
pub enum Error {
    /// Malformed file contents (bad magic, missing or duplicate cells).
    #[error("format error: {0}")]
    Format(String),

    /// Well-formed input that violates a data invariant (non-finite value, ragged table).
    #[error("validation error: {0}")]
    Validation(String),

    /// Invalid parameter or dimension mismatch.
    #[error("parameter error: {0}")]
    Parameter(String),

    /// Invalid command-line or config-file setting.
    #[error("config error: {0}")]
    Config(String),

    /// Numerically degenerate input (tied pairs only, zero spectrum, constant window).
    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// A Monte-Carlo replication failed; carries the seed needed to reproduce it.
    #[error("replication {rep} (seed {seed}) failed: {source}")]
    Replication {
        rep: usize,
        seed: u64,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for the CLI: 2 config, 3 data/format, 4 numerical.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Parameter(_) => 2,
            Error::Format(_) | Error::Validation(_) | Error::Io { .. } => 3,
            Error::Degenerate(_) => 4,
            Error::Replication { source, .. } => source.exit_code(),
        }
    }
}
