use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("island index {index} out of range for {lambda} islands")]
    IndexOutOfRange { index: usize, lambda: usize },
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("exact chain refused: n = {n} exceeds the limit of {limit} bits")]
    ChainTooLarge { n: usize, limit: usize },
    #[error("singular system: {0}")]
    Singular(String),
    #[error("all {0} replicates hit the round cap")]
    AllTrapped(usize),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
