use std::path::PathBuf;

use crate::model::ValidationIssue;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid model: {}", join_issues(.0))]
    Validation(Vec<ValidationIssue>),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A combination of otherwise valid components that cannot run together.
    #[error("{0}")]
    Incompatible(String),

    #[error("mode {mode} is overdamped (gamma {gamma} >= omega {omega}); the transfer-function scheme requires underdamped modes")]
    Overdamped { mode: usize, gamma: f64, omega: f64 },

    #[error("simulation became unstable at step {step}: mode {mode} reached {value}")]
    Instability { step: usize, mode: usize, value: f64 },

    #[error("optimisation failed: {0}")]
    Optimisation(String),

    #[error("unsupported audio encoding: {0}")]
    UnsupportedEncoding(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("wav: {0}")]
    Wav(#[from] hound::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub fn arg(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}

fn join_issues(issues: &[ValidationIssue]) -> String {
    issues.iter().map(|i| i.to_string()).collect::<Vec<_>>().join("; ")
}
