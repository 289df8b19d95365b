use thiserror::Error;

/// Failures mapped onto the process exit codes.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Parse(String),
    #[error("{0}")]
    Method(String),
    #[error("{0}")]
    Verification(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Parse(_) => 2,
            CliError::Method(_) => 3,
            CliError::Verification(_) => 4,
        }
    }
}

impl From<invzero::Error> for CliError {
    fn from(e: invzero::Error) -> Self {
        match e {
            invzero::Error::InvalidInput(_) | invzero::Error::DimensionMismatch { .. } => CliError::Parse(e.to_string()),
            invzero::Error::VerificationFailure(_) => CliError::Verification(e.to_string()),
            _ => CliError::Method(e.to_string()),
        }
    }
}
