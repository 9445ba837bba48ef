use thiserror::Error;

use crate::linalg::LinalgError;
use crate::measurements::PovmError;
use crate::testers::TesterError;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Povm(#[from] PovmError),
    #[error(transparent)]
    Tester(#[from] TesterError),
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("internal consistency check failed: {0}")]
    Consistency(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
