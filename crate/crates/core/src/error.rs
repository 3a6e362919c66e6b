use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed or inconsistent input (dimension mismatch, invalid values).
    #[error("invalid input: {0}")]
    Input(String),
    /// Argument outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// An iterative numeric procedure did not converge.
    #[error("numeric error: {0}")]
    Numeric(String),
    /// Iteration budget exhausted.
    #[error("budget exceeded: {0}")]
    Budget(String),
    /// A truncation window is too short for the requested construction.
    #[error("window too short: {0}")]
    Window(String),
    /// Index past the end of a finite sequence.
    #[error("out of range: {0}")]
    Range(String),
    /// The requested analysis needs data the report did not retain.
    #[error("capability: {0}")]
    Capability(String),
    /// Two independent evaluation paths disagree.
    #[error("consistency check failed: {0}")]
    Consistency(String),
}

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }
}
