use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfiguration(String),

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("infeasible initializer: {0}")]
    Infeasible(String),

    #[error("enumeration guard exceeded: {0}")]
    TooLarge(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("empty input: {0}")]
    Empty(String),
}

impl Error {
    /// Short machine-readable tag, used as the first field of CLI error lines.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidConfiguration(_) => "invalid-configuration",
            Error::InvalidDistribution(_) => "invalid-distribution",
            Error::InvalidParameter(_) => "invalid-parameter",
            Error::Infeasible(_) => "infeasible",
            Error::TooLarge(_) => "too-large",
            Error::Parse(_) => "parse",
            Error::Empty(_) => "empty",
        }
    }

    /// The message without the kind prefix.
    pub fn message(&self) -> &str {
        match self {
            Error::InvalidConfiguration(m)
            | Error::InvalidDistribution(m)
            | Error::InvalidParameter(m)
            | Error::Infeasible(m)
            | Error::TooLarge(m)
            | Error::Parse(m)
            | Error::Empty(m) => m,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
