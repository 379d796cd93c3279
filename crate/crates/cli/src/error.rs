use qcmsv_core::Error;
use thiserror::Error as ThisError;

#[derive(Debug, ThisError)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error(transparent)]
    Core(#[from] Error),

    #[error("{context}: {source}")]
    Context { context: String, source: Error },

    #[error("cannot write {path}: {message}")]
    Output { path: String, message: String },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Core(e) | CliError::Context { source: e, .. } => core_exit_code(e),
            CliError::Output { .. } => 1,
        }
    }
}

/// Bad arguments and unreadable inputs are usage errors; everything raised
/// while computing is a computation error.
fn core_exit_code(e: &Error) -> i32 {
    match e {
        Error::InvalidInput(_)
        | Error::InvalidQ(_)
        | Error::InvalidS { .. }
        | Error::InvalidOrder { .. }
        | Error::Parse(_)
        | Error::Io(_) => 2,
        _ => 1,
    }
}

pub(crate) trait WithContext<T> {
    fn context(self, f: impl FnOnce() -> String) -> Result<T, CliError>;
}

impl<T> WithContext<T> for Result<T, Error> {
    fn context(self, f: impl FnOnce() -> String) -> Result<T, CliError> {
        self.map_err(|source| CliError::Context { context: f(), source })
    }
}
