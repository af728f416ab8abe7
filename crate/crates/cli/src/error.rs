use thiserror::Error;

/// CLI failure modes, mapped onto the exit-code contract.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("check failed: {0}")]
    CheckFailed(String),
    #[error("{0}")]
    Numerical(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::CheckFailed(_) => 1,
            CliError::Numerical(_) => 3,
            CliError::Io(_) => 4,
        }
    }

    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }

    pub fn missing(field: &str) -> Self {
        CliError::Usage(format!("missing required field: {field}"))
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<weaknh::linalg::LinalgError> for CliError {
    fn from(e: weaknh::linalg::LinalgError) -> Self {
        CliError::Numerical(e.to_string())
    }
}

impl From<weaknh::ensembles::EnsembleError> for CliError {
    fn from(e: weaknh::ensembles::EnsembleError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<weaknh::diagnostics::DiagnosticsError> for CliError {
    fn from(e: weaknh::diagnostics::DiagnosticsError) -> Self {
        CliError::Numerical(e.to_string())
    }
}

impl From<weaknh::saddle::SaddleError> for CliError {
    fn from(e: weaknh::saddle::SaddleError) -> Self {
        CliError::Numerical(e.to_string())
    }
}

impl From<weaknh::kernel::KernelError> for CliError {
    fn from(e: weaknh::kernel::KernelError) -> Self {
        CliError::Numerical(e.to_string())
    }
}

impl From<weaknh::correlation::CorrelationError> for CliError {
    fn from(e: weaknh::correlation::CorrelationError) -> Self {
        CliError::Numerical(e.to_string())
    }
}

impl From<weaknh::heatflow::HeatflowError> for CliError {
    fn from(e: weaknh::heatflow::HeatflowError) -> Self {
        CliError::Numerical(e.to_string())
    }
}
