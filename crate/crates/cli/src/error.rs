use std::process::ExitCode;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad flags, bad config, unreadable inputs.
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Domain(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Usage(_) => ExitCode::from(2),
            CliError::Domain(_) | CliError::Io(_) => ExitCode::from(1),
        }
    }
}

impl From<tvbound::Error> for CliError {
    fn from(e: tvbound::Error) -> Self {
        match e {
            tvbound::Error::InvalidArgument(_) => CliError::Usage(e.to_string()),
            _ => CliError::Domain(e.to_string()),
        }
    }
}
