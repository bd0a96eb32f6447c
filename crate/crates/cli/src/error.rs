use binsel_core::Error as CoreError;
use binsel_models::ModelError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags or out-of-range settings.
    #[error("{0}")]
    Usage(String),
    /// Inputs that cannot be read as expected or contradict themselves.
    #[error("{0}")]
    Data(String),
    #[error("{0}")]
    Divergence(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Data(_) => 3,
            CliError::Divergence(_) => 4,
            CliError::Io { .. } => 5,
        }
    }

    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::InvalidSpec(_)
            | CoreError::InvalidEaConfig(_)
            | CoreError::InvalidTau(_)
            | CoreError::InvalidExponent(_)
            | CoreError::InvalidTrainFraction(_)
            | CoreError::InvalidFoldCount { .. }
            | CoreError::ZeroCapacity => CliError::Usage(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::Divergence { .. } => CliError::Divergence(e.to_string()),
            ModelError::InvalidConfig(_) => CliError::Usage(e.to_string()),
            ModelError::Core(c) => c.into(),
            _ => CliError::Data(e.to_string()),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
