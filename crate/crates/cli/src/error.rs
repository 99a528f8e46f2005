use std::fmt;
use std::path::PathBuf;

use modal_core::Error as CoreError;

/// Process exit status; a stable contract for scripts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitCode {
    Success = 0,
    Validation = 1,
    Incompatible = 2,
    Optimisation = 3,
    Io = 4,
}

#[derive(Debug)]
pub enum CliError {
    Core(CoreError),
    /// Malformed or incomplete configuration.
    Config(String),
    Incompatible(String),
    Io { path: PathBuf, source: std::io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Config(_) => ExitCode::Validation,
            CliError::Incompatible(_) => ExitCode::Incompatible,
            CliError::Io { .. } => ExitCode::Io,
            CliError::Core(e) => match e {
                CoreError::Validation(_) | CoreError::InvalidArgument(_) | CoreError::Json(_) => ExitCode::Validation,
                CoreError::Incompatible(_) | CoreError::Overdamped { .. } | CoreError::Instability { .. } => {
                    ExitCode::Incompatible
                }
                CoreError::Optimisation(_) => ExitCode::Optimisation,
                CoreError::Io { .. } | CoreError::Wav(_) | CoreError::UnsupportedEncoding(_) => ExitCode::Io,
            },
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Config(msg) => write!(f, "configuration: {msg}"),
            CliError::Incompatible(msg) => write!(f, "{msg}"),
            CliError::Io { path, source } => write!(f, "{}: {source}", path.display()),
        }
    }
}

impl std::error::Error for CliError {}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        CliError::Core(e)
    }
}

pub type CliResult<T> = Result<T, CliError>;
