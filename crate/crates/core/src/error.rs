use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// The instance is larger than the representation or algorithm supports.
    #[error("capacity exceeded: {0}")]
    Capacity(String),

    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("spectral energy is undefined for an all-zero spectrum")]
    UndefinedEnergy,

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("no reports to fit")]
    EmptyReports,

    #[error("training diverged: {0}")]
    Training(String),

    #[error("model build failed: {0}")]
    ModelBuild(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
