use thiserror::Error;

#[derive(Debug, Error)]
pub enum LabError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] relcap::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl LabError {
    /// 2 for invalid input, 4 for a Monte Carlo resource cap, 1 otherwise.
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Core(relcap::Error::ResourceCap(_)) => 4,
            Self::Config(_) | Self::Core(_) | Self::Json(_) => 2,
            Self::Io(_) | Self::Csv(_) => 1,
        }
    }
}

pub type LabResult<T> = Result<T, LabError>;
