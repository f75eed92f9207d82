use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("index set of predicted size {predicted} exceeds the cap of {cap} entries")]
    CardinalityGuard { predicted: u64, cap: u64 },

    #[error("enumeration guard exceeded: {0}")]
    EnumerationGuard(String),

    #[error("point {point:?} lies outside [-1, 1]")]
    OutOfDomain { point: Vec<f64> },

    #[error("target function returned {value} at {point:?}")]
    EvaluationFailure { point: Vec<f64>, value: f64 },

    #[error("input contains NaN or infinite values")]
    NonFinite,

    #[error("matrix is rank deficient (relative pivot {ratio:.3e})")]
    RankDeficient { ratio: f64 },

    #[error("linear algebra failure: {0}")]
    LinearAlgebra(String),

    #[error("every cross-validation candidate failed")]
    CrossValidationFailed,

    #[error("unknown test function `{0}`")]
    UnknownFunction(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
