use mec_core::MecError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Unreadable or invalid input, bad flags.
    #[error("{0}")]
    Input(String),

    /// A mathematical check failed, or a search cap stopped the oracle.
    #[error("{0}")]
    Failed(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 1,
            CliError::Failed(_) => 2,
        }
    }
}

impl From<MecError> for CliError {
    fn from(e: MecError) -> Self {
        if e.is_math_failure() || matches!(e, MecError::CapExceeded { .. }) {
            CliError::Failed(e.to_string())
        } else {
            CliError::Input(e.to_string())
        }
    }
}
