use std::path::PathBuf;

use stochill_core::Error as CoreError;

/// Failures surfaced by the CLI, split by exit code.
#[derive(Debug, thiserror::Error)]
pub enum AppError {
    /// Bad input: configuration, barrier table, orbit trace, flags.
    #[error("configuration error: {0}")]
    Config(String),

    /// A numerical step failed on valid input.
    #[error("numerical failure: {0}")]
    Numeric(CoreError),

    #[error("cannot read {}: {source}", path.display())]
    Read { path: PathBuf, source: std::io::Error },

    #[error("cannot write {}: {source}", path.display())]
    Write { path: PathBuf, source: std::io::Error },
}

pub type AppResult<T> = Result<T, AppError>;

impl AppError {
    /// 0 success, 1 numeric failure, 2 configuration/validation failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) | Self::Read { .. } => 2,
            Self::Numeric(_) | Self::Write { .. } => 1,
        }
    }

    pub fn config(msg: impl Into<String>) -> Self {
        Self::Config(msg.into())
    }
}

impl From<CoreError> for AppError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::Config { .. }
            | CoreError::Domain { .. }
            | CoreError::InvalidTable(_)
            | CoreError::InvalidTrace(_)
            | CoreError::InsufficientTrace { .. }
            | CoreError::GridMismatch { .. }
            | CoreError::UnsupportedForm
            | CoreError::NoPointwiseValue => Self::Config(e.to_string()),
            other => Self::Numeric(other),
        }
    }
}
