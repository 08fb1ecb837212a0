//! Error type shared by every module of the crate.

use std::path::PathBuf;

/// Errors raised by model construction, the inference engines and file I/O.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// The truncation interval carries no (numerically) representable mass.
    #[error("degenerate truncation: {0}")]
    DegenerateTruncation(String),

    /// Cholesky factorization met a non-positive pivot.
    #[error("factorization failed at row {index}: pivot {pivot:e} is not positive")]
    Factorization { index: usize, pivot: f64 },

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    /// An input file could not be read or parsed.
    #[error("{}: {message}", path.display())]
    Input { path: PathBuf, message: String },

    /// An output file could not be written.
    #[error("{}: {source}", path.display())]
    Output {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn input(path: impl Into<PathBuf>, msg: impl std::fmt::Display) -> Self {
        Error::Input {
            path: path.into(),
            message: msg.to_string(),
        }
    }

    /// Process exit status for the command-line front end: 2 for usage and
    /// validation problems, 1 for failures at run time.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidArgument(_) | Error::DimensionMismatch(_) | Error::Input { .. } => 2,
            _ => 1,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
