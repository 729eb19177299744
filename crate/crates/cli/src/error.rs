use std::path::PathBuf;

use trialsent_annotate::ApiError;

pub type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("{path} not found; run `trialsent {stage}` first")]
    Missing { path: PathBuf, stage: &'static str },

    #[error("{0}")]
    Data(String),

    #[error("{0}")]
    Transport(String),
}

impl CliError {
    /// 1 usage or configuration, 2 data, 3 transport.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Config(_) | CliError::Missing { .. } => 1,
            CliError::Data(_) => 2,
            CliError::Transport(_) => 3,
        }
    }
}

impl From<trialsent_core::Error> for CliError {
    fn from(e: trialsent_core::Error) -> Self {
        use trialsent_core::Error as E;
        match e {
            E::Config(m) => CliError::Config(m),
            E::Transport { .. } => CliError::Transport(e.to_string()),
            other => CliError::Data(other.to_string()),
        }
    }
}

impl From<ApiError> for CliError {
    fn from(e: ApiError) -> Self {
        match e {
            ApiError::BadRequest(m) => CliError::Config(m),
            other => CliError::Data(other.to_string()),
        }
    }
}
