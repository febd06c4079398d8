//! CLI error taxonomy mapped to process exit codes.

use peakcr_core::Error as CoreError;

/// Errors surfaced by the command-line tool, classified by exit code:
/// configuration problems exit 1, unreadable or malformed data exits 2, and
/// numeric failures during computation exit 3.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad configuration: unparsable config file, invalid parameter
    /// combinations, unsupported requests.
    #[error("{0}")]
    Config(String),
    /// Unusable input data: missing files, malformed CSV or containers.
    #[error("{0}")]
    Data(String),
    /// Numeric failure while computing: singular systems, degenerate
    /// estimates, failed experiments.
    #[error("{0}")]
    Numeric(String),
}

impl CliError {
    /// Process exit code for this error class.
    #[must_use]
    pub fn code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Data(_) => 2,
            CliError::Numeric(_) => 3,
        }
    }

    /// Classify an error from the core library raised while running a
    /// command. Unsupported feature combinations are configuration errors,
    /// an input series too short for the requested segmentation is a data
    /// error, and everything else is a numeric failure.
    #[must_use]
    pub fn from_run(err: CoreError) -> Self {
        match err {
            CoreError::UnsupportedMonteCarloCohensD => CliError::Config(err.to_string()),
            CoreError::SeriesTooShort { .. } => CliError::Data(err.to_string()),
            other => CliError::Numeric(other.to_string()),
        }
    }

    /// Treat a core error as a configuration problem (validation stage).
    #[must_use]
    pub fn from_config(err: CoreError) -> Self {
        CliError::Config(err.to_string())
    }
}

/// Convenience alias.
pub type CliResult<T> = Result<T, CliError>;
