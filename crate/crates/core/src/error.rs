use thiserror::Error;

/// Errors split into the two classes the command line maps to exit codes:
/// bad input (1) and numerical failure (2).
#[derive(Debug, Error)]
pub enum MtmError {
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl MtmError {
    pub fn invalid(msg: impl Into<String>) -> Self {
        MtmError::Invalid(msg.into())
    }

    pub fn numerical(msg: impl Into<String>) -> Self {
        MtmError::Numerical(msg.into())
    }

    /// Process exit code for this error class.
    pub fn exit_code(&self) -> i32 {
        match self {
            MtmError::Numerical(_) => 2,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, MtmError>;
