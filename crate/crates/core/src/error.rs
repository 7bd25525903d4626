use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("basis dimension {dimension} is outside the supported range 1..={cap}")]
    Capacity { dimension: u128, cap: usize },

    #[error("exhaustive enumeration over {parties} parties exceeds the limit of {limit}")]
    EnumerationLimit { parties: usize, limit: usize },

    #[error("mode index {index} out of range for {n_modes} modes")]
    ModeOutOfRange { index: usize, n_modes: usize },

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("generator is not Hermitian (max |M - M^dagger| = {deviation:e})")]
    NotHermitian { deviation: f64 },

    #[error("projection onto the one-atom-per-well subspace has zero norm")]
    DegenerateProjection,

    #[error("relative violation undefined for a zero Bell value")]
    UndefinedRatio,

    #[error("configuration error: {0}")]
    Config(String),

    #[error("strict check failed: {0}")]
    StrictCheck(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn argument(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code used by the command-line driver.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Capacity { .. } | Error::EnumerationLimit { .. } => 3,
            Error::StrictCheck(_) => 4,
            Error::Io { .. } => 5,
            _ => 2,
        }
    }
}
