use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed or inconsistent caller input.
    #[error("input error: {0}")]
    Input(String),

    /// The data cannot support the requested computation (singular covariance, zero df, ...).
    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// A documented precondition of an operation was violated.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// An invariant that construction should guarantee did not hold.
    #[error("internal error: {0}")]
    Internal(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Short category label, used by the CLI for exit codes and messages.
    pub fn category(&self) -> &'static str {
        match self {
            Error::Input(_) | Error::Json(_) | Error::Csv(_) => "input",
            Error::Degenerate(_) => "degenerate",
            Error::Precondition(_) => "precondition",
            Error::Internal(_) => "internal",
            Error::Io(_) => "io",
        }
    }
}

pub(crate) fn input<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Input(msg.into()))
}
