use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("loss became non-finite ({loss}) in epoch {epoch} at learning rate {learning_rate}")]
    Divergence {
        epoch: usize,
        learning_rate: f64,
        loss: f64,
    },
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("{features} feature rows but {labels} labels")]
    LengthMismatch { features: usize, labels: usize },
    #[error("all instances must share one capacity")]
    MixedCapacity,
    #[error("need at least 2 distinct labels, found {0}")]
    TooFewClasses(usize),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Core(#[from] binsel_core::Error),
}

pub type Result<T> = std::result::Result<T, ModelError>;
