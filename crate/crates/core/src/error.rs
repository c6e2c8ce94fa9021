use thiserror::Error;

/// Errors raised by the core library.
///
/// Each variant maps to one failure class so callers (the CLI in particular)
/// can translate it into a stable exit status.
#[derive(Debug, Error)]
pub enum RcpError {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A law was constructed with invalid parameters.
    #[error("invalid law: {0}")]
    InvalidLaw(String),

    /// The operation is not defined for the given law family.
    #[error("unsupported law: {0}")]
    UnsupportedLaw(String),

    /// A configured memory or event budget would be exceeded.
    #[error("capacity exceeded: {0}")]
    Capacity(String),

    /// A mathematical precondition of the requested computation fails.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// The pair of laws cannot be coupled by hazard thinning.
    #[error("inadmissible coupling: {0}")]
    Inadmissible(String),

    /// A search over a bounded range found nothing.
    #[error("no solution: {0}")]
    NoSolution(String),

    /// A serialized sample is malformed or has the wrong version.
    #[error("format error: {0}")]
    Format(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, RcpError>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(RcpError::Domain(msg.into()))
}

pub(crate) fn precondition<T>(msg: impl Into<String>) -> Result<T> {
    Err(RcpError::Precondition(msg.into()))
}
