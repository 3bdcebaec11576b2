use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error(transparent)]
    Core(#[from] urn_core::Error),

    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: String,
        source: serde_json::Error,
    },

    #[error("CSV output: {0}")]
    Csv(#[from] csv::Error),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            source,
        }
    }

    /// 1 for bad input, 2 when the data rule out the requested analysis.
    pub fn exit_code(&self) -> u8 {
        use urn_core::Error as E;
        match self {
            CliError::Core(
                E::NegativeVariance { .. }
                | E::EmptyBounds { .. }
                | E::EmptySupport(_)
                | E::PriorAnnihilatesSupport,
            ) => 2,
            _ => 1,
        }
    }
}
