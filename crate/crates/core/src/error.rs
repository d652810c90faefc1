use thiserror::Error;

/// Errors produced anywhere in the simulation pipeline.
///
/// The variants line up with the CLI exit codes: schema and validation
/// problems are user errors, resource errors mean the instance is too big
/// for the requested engine.
#[derive(Debug, Error)]
pub enum Error {
    #[error("schema error: {0}")]
    Schema(String),
    #[error("validation error: {0}")]
    Validation(String),
    #[error("resource error: {0}")]
    Resource(String),
    #[error("parameter error: {0}")]
    Parameter(String),
    #[error("decomposition error: {0}")]
    Decomposition(String),
    #[error("undefined metric: {0}")]
    UndefinedMetric(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    /// True for errors caused by bad input rather than by size limits or I/O.
    pub fn is_user_input(&self) -> bool {
        matches!(
            self,
            Error::Schema(_) | Error::Validation(_) | Error::Parameter(_) | Error::UndefinedMetric(_)
        )
    }
}
