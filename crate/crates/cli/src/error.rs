use thiserror::Error;
use witness_forge_core::Error as CoreError;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage error: {0}")]
    Usage(String),

    #[error("could not parse input: {0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(String),

    #[error(transparent)]
    Core(#[from] CoreError),
}

impl CliError {
    /// 2 for usage and input problems, 3 for numerical non-convergence.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(CoreError::NonConvergence { .. } | CoreError::InsufficientSamples { .. }) => 3,
            _ => 2,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
