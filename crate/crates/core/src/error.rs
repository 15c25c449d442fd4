use thiserror::Error;

#[derive(Debug, Error)]
pub enum LabError {
    #[error("corrupted state: {0}")]
    Corrupted(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("domain overflow: {0}")]
    DomainOverflow(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("unsupported parameter: {0}")]
    Unsupported(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, LabError>;
