use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("computation failed: {0}")]
    Compute(#[from] spin_triangle::Error),
    #[error("cannot write output: {0}")]
    Io(#[from] std::io::Error),
    #[error("reference check: no result named {0:?}")]
    MissingResult(String),
    #[error("{failed} of {total} reference checks failed")]
    CheckFailed { failed: usize, total: usize },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Compute(_) | CliError::Io(_) | CliError::MissingResult(_) => 3,
            CliError::CheckFailed { .. } => 4,
        }
    }
}
