use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("item {index} has weight {weight}, outside [1, {capacity}]")]
    ItemOutOfRange {
        index: usize,
        weight: u32,
        capacity: u32,
    },
    #[error("bin capacity must be positive")]
    ZeroCapacity,
    #[error("instance has no items")]
    EmptyInstance,
    #[error("exponent k must be positive, got {0}")]
    InvalidExponent(f64),
    #[error("bins used ({bins_used}) below lower bound ({lower})")]
    BelowLowerBound { bins_used: u32, lower: u32 },
    #[error("lower bound must be at least 1")]
    ZeroLowerBound,
    #[error("exhaustive search limited to {limit} items, instance has {n}")]
    TooLargeForExactSearch { n: usize, limit: usize },
    #[error("invalid generator spec: {0}")]
    InvalidSpec(String),
    #[error("invalid EA config: {0}")]
    InvalidEaConfig(String),
    #[error(
        "{class} acceptance rate {rate:.6} fell below floor {floor} after {trials} trials at tau {tau} \
         (accepted {accepted_bf} BF, {accepted_ff} FF)"
    )]
    AcceptanceFloor {
        tau: f64,
        class: String,
        trials: usize,
        accepted_bf: usize,
        accepted_ff: usize,
        rate: f64,
        floor: f64,
    },
    #[error("tau must be non-negative and finite, got {0}")]
    InvalidTau(f64),
    #[error("duplicate instance id {0:?}")]
    DuplicateId(String),
    #[error("train fraction must lie strictly between 0 and 1, got {0}")]
    InvalidTrainFraction(f64),
    #[error("class {class} has {size} members, need at least {needed}")]
    ClassTooSmall {
        class: String,
        size: usize,
        needed: usize,
    },
    #[error("k-fold needs 2 <= k <= dataset size, got k={k} for {n} instances")]
    InvalidFoldCount { k: usize, n: usize },
    #[error("{predictions} predictions for {instances} instances")]
    LengthMismatch {
        predictions: usize,
        instances: usize,
    },
    #[error("prediction {prediction} for {id:?} is not among the dataset's candidate heuristics")]
    PredictionOutsideCandidates { id: String, prediction: String },
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("p-value {0} outside [0, 1]")]
    InvalidPValue(f64),
    #[error("inconsistent record {id:?}: {reason}")]
    InconsistentRecord { id: String, reason: String },
}

pub type Result<T> = std::result::Result<T, Error>;
