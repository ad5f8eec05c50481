use serde::{Deserialize, Serialize};

/// Failures shared by the command line and the service. Every one maps to
/// exit status 3; the service also picks an HTTP status.
#[derive(Debug, thiserror::Error)]
pub enum AppError {
    #[error("{0}")]
    Load(String),
    #[error("{0}")]
    BadRequest(String),
    #[error("{0} not found")]
    NotFound(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Internal(String),
}

pub const EXIT_FULFILLED: u8 = 0;
pub const EXIT_REFUTED: u8 = 1;
pub const EXIT_EXHAUSTED: u8 = 2;
pub const EXIT_ERROR: u8 = 3;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub code: String,
    pub message: String,
    pub exit_status: u8,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorDoc {
    pub error: ErrorBody,
}

impl AppError {
    pub fn code(&self) -> &'static str {
        match self {
            AppError::Load(_) => "load_error",
            AppError::BadRequest(_) => "bad_request",
            AppError::NotFound(_) => "not_found",
            AppError::Io(_) => "io_error",
            AppError::Internal(_) => "internal",
        }
    }

    pub fn body(&self) -> ErrorBody {
        ErrorBody { code: self.code().into(), message: self.to_string(), exit_status: EXIT_ERROR }
    }
}
