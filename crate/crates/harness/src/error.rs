use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, HarnessError>;

#[derive(Debug, Error)]
pub enum HarnessError {
    /// Malformed input or configuration; nothing was run.
    #[error("{0}")]
    Invalid(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Core(#[from] alloom_core::Error),
    #[error("failed to build worker pool: {0}")]
    Pool(String),
}

impl HarnessError {
    pub fn invalid(msg: impl Into<String>) -> Self {
        HarnessError::Invalid(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        HarnessError::Io {
            path: path.into(),
            source,
        }
    }

    /// 1 for validation failures, 2 for anything that went wrong while running.
    pub fn exit_code(&self) -> i32 {
        use alloom_core::Error as E;
        match self {
            HarnessError::Invalid(_) => 1,
            HarnessError::Core(e) => match e {
                E::InvalidConfig(_)
                | E::SchemaMismatch(_)
                | E::BudgetExceedsPool { .. }
                | E::ClassTooSmall { .. }
                | E::SeedTableExhausted { .. }
                | E::SeriesShorterThanWindow { .. }
                | E::NonFiniteSample
                | E::LabelOutOfRange { .. }
                | E::DimensionMismatch { .. }
                | E::Empty(_) => 1,
                _ => 2,
            },
            HarnessError::Io { .. } | HarnessError::Pool(_) => 2,
        }
    }
}
