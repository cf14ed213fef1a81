use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad input: unreadable or malformed files, invalid settings.
    #[error("{0}")]
    Validation(String),
    /// The planner proved or reported that no plan exists.
    #[error("{0}")]
    Infeasible(String),
    #[error("random map generation gave up after {0} rejected candidates")]
    GenerationFailure(usize),
    #[error("{0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Infeasible(_) => 3,
            CliError::GenerationFailure(_) | CliError::Internal(_) => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

pub(crate) fn io_error(path: &std::path::Path, e: std::io::Error) -> CliError {
    CliError::Validation(format!("{}: {e}", path.display()))
}
