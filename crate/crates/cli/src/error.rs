use rcp_core::RcpError;
use thiserror::Error;

/// Failures of a CLI run, each with a stable exit status.
#[derive(Debug, Error)]
pub enum CliError {
    /// The config file is unreadable, malformed or inconsistent.
    #[error("config error in `{field}`: {message}")]
    Config { field: String, message: String },

    #[error(transparent)]
    Core(#[from] RcpError),

    #[error("i/o error on {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

impl CliError {
    pub fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self::Config { field: field.into(), message: message.into() }
    }

    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Self::Io { path: path.as_ref().display().to_string(), source }
    }

    /// 0 success, 2 config, 3 capacity, 4 precondition, 5 dump format, 1 anything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config { .. } => 2,
            Self::Core(e) => match e {
                RcpError::Domain(_)
                | RcpError::InvalidLaw(_)
                | RcpError::UnsupportedLaw(_)
                | RcpError::Inadmissible(_) => 2,
                RcpError::Capacity(_) => 3,
                RcpError::Precondition(_) | RcpError::NoSolution(_) => 4,
                RcpError::Format(_) => 5,
                RcpError::Io(_) => 1,
            },
            Self::Io { .. } => 1,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
