use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the formula.
    #[error("domain error: {0}")]
    Domain(String),

    /// Inconsistent physical or simulation configuration.
    #[error("configuration error: {0}")]
    Config(String),

    /// A force evaluation or state update produced a non-finite value.
    #[error("integration fault: {0}")]
    Integration(String),

    /// Not enough data to form an estimate or test statistic.
    #[error("statistics error: {0}")]
    Statistics(String),

    /// The run completed but its results cannot be trusted.
    #[error("run invalid: {0}")]
    RunInvalid(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }
}
