use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("invalid coupling matrix {role}: {reason}")]
    InvalidCoupling { role: char, reason: String },

    #[error("matrix outside the domain of the operation: {0}")]
    Domain(String),

    #[error("singular matrix: {0}")]
    Singular(String),

    #[error("{condition} violated: {detail}")]
    Incompatible { condition: String, detail: String },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("assembly failed: {0}")]
    Assembly(String),

    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),

    #[error("non-finite state after step {step}")]
    NonFinite { step: usize },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("system has {unknowns} unknowns, above the spectrum cap of {cap}; reduce the mesh")]
    TooLarge { unknowns: usize, cap: usize },

    #[error("scenario: {0}")]
    Scenario(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
