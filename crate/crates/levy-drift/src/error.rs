use std::io;
use std::path::PathBuf;

use levy_drift_core::Error as CoreError;

/// Process exit codes.
pub mod exit {
    /// Ergodicity certified, or the command completed.
    pub const CERTIFIED: i32 = 0;
    pub const NOT_CERTIFIED: i32 = 1;
    /// No verdict: an inconclusive decision or a numerical failure.
    pub const INCONCLUSIVE: i32 = 2;
    pub const USAGE: i32 = 64;
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("cannot read config {path}: {source}")]
    ReadConfig { path: PathBuf, source: io::Error },
    #[error("invalid config: {0}")]
    Config(String),
    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: io::Error },
    #[error(transparent)]
    Core(#[from] CoreError),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::ReadConfig { .. } | CliError::Config(_) => exit::USAGE,
            CliError::Core(CoreError::InvalidParameter { .. } | CoreError::DimensionMismatch { .. }) => {
                exit::USAGE
            }
            CliError::Write { .. } | CliError::Core(_) => exit::INCONCLUSIVE,
        }
    }
}

/// Configuration-time failures of the core constructors are schema errors.
pub(crate) fn config_err(e: CoreError) -> CliError {
    CliError::Config(e.to_string())
}
