use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("line {line}: {msg}")]
    Parse { line: u64, msg: String },
    #[error("line {line}: timestamp earlier than the previous row")]
    UnsortedData { line: u64 },
    #[error("line {line}: price must be positive")]
    NonPositivePrice { line: u64 },
    #[error("window of {window} ticks is longer than the series ({len} ticks)")]
    WindowTooLong { window: usize, len: usize },
    #[error("need at least 2 windows, got {0}")]
    TooFewWindows(usize),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] ota_core::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, HarnessError>;
