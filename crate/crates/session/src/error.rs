use thiserror::Error;

pub type Result<T, E = SessionError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum SessionError {
    #[error("validation error: {0}")]
    Validation(String),

    #[error("session {0} not found")]
    NotFound(String),

    #[error("session {0} is closed")]
    Closed(String),

    #[error("storage error: {0}")]
    Storage(String),
}

impl From<flbandit_core::Error> for SessionError {
    fn from(err: flbandit_core::Error) -> Self {
        match err {
            flbandit_core::Error::Io(io) => SessionError::Storage(io.to_string()),
            other => SessionError::Validation(other.to_string()),
        }
    }
}

impl From<std::io::Error> for SessionError {
    fn from(err: std::io::Error) -> Self {
        SessionError::Storage(err.to_string())
    }
}
