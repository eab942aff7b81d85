use std::io;
use std::path::PathBuf;

/// Failures of the harness, grouped by the exit code they map to.
#[derive(Debug, thiserror::Error)]
pub enum LabError {
    /// Bad flag, bad config-file entry or a value outside a precondition.
    #[error("usage error: {0}")]
    Usage(String),
    #[error("{command}: {source}")]
    Simulation {
        command: &'static str,
        #[source]
        source: rrdps_core::Error,
    },
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("serialization failed: {0}")]
    Serialize(String),
}

impl LabError {
    pub fn usage(msg: impl Into<String>) -> Self {
        LabError::Usage(msg.into())
    }

    /// Usage error that names the offending key.
    pub fn key(key: &str, reason: impl std::fmt::Display) -> Self {
        LabError::Usage(format!("`{key}`: {reason}"))
    }

    /// Every error exits with the usage code; only a completed run with a
    /// failing claim exits with 1.
    pub fn exit_code(&self) -> i32 {
        crate::EXIT_USAGE
    }
}

/// Maps a core precondition failure onto a usage error naming the key.
pub(crate) fn precondition(err: rrdps_core::Error) -> LabError {
    match err {
        rrdps_core::Error::InvalidParameter { name, reason } => LabError::key(name, reason),
        other => LabError::usage(other.to_string()),
    }
}

pub type LabResult<T> = Result<T, LabError>;
