use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AncError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("unstable system: {0}")]
    Unstable(String),

    #[error("improper system: {0}")]
    Improper(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Normal matrix of the Wiener-Hopf equation is singular or too
    /// ill-conditioned to invert.
    #[error("singular normal matrix (condition number {condition:e})")]
    Singular { condition: f64 },

    #[error("config error in `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("io error: {0}")]
    Io(String),
}

impl AncError {
    pub fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        AncError::Config {
            field: field.into(),
            message: message.into(),
        }
    }
}

impl From<std::io::Error> for AncError {
    fn from(err: std::io::Error) -> Self {
        AncError::Io(err.to_string())
    }
}

impl From<csv::Error> for AncError {
    fn from(err: csv::Error) -> Self {
        AncError::Io(err.to_string())
    }
}

pub type Result<T> = std::result::Result<T, AncError>;
