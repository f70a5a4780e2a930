use thiserror::Error;

use crate::group::GroupId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Caller violated a documented precondition.
    #[error("usage error: {0}")]
    Usage(String),

    #[error("group mismatch: {left:?} vs {right:?}")]
    GroupMismatch { left: GroupId, right: GroupId },

    /// A matrix drifted too far from its group to be projected back.
    #[error("numerical drift: element is {distance:.3e} from the group (limit 0.1)")]
    NumericalDrift { distance: f64 },

    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("algorithm {algorithm} is not supported for group {group:?}")]
    UnsupportedAlgorithm { algorithm: &'static str, group: GroupId },

    #[error("fit failed: {0}")]
    FitFailure(String),

    #[error("invalid config at `{key}`: {message}")]
    Config { key: String, message: String },

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn usage(msg: impl Into<String>) -> Self {
        Error::Usage(msg.into())
    }

    pub(crate) fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            message: message.into(),
        }
    }

    /// Process exit code: 1 for usage/config problems, 2 for numerical or
    /// validation failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Usage(_)
            | Error::GroupMismatch { .. }
            | Error::UnsupportedAlgorithm { .. }
            | Error::Config { .. } => 1,
            _ => 2,
        }
    }
}
