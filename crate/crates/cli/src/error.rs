use thiserror::Error;

use vdamage_core::classify::ClassifyError;
use vdamage_core::config::ConfigError;
use vdamage_core::ingest::IngestError;
use vdamage_core::sampler::SamplerError;
use vdamage_core::stats::StatsError;
use vdamage_core::synth::SynthError;

/// Exit codes: 0 ok, 1 usage, 2 data, 3 model.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
    #[error("{0}")]
    Model(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Model(_) => 3,
        }
    }

    pub fn data(e: impl std::fmt::Display) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Usage(format!("config: {e}"))
    }
}

impl From<ClassifyError> for CliError {
    fn from(e: ClassifyError) -> Self {
        match e {
            ClassifyError::ModelLoad(_) | ClassifyError::ShapeMismatch { .. } | ClassifyError::Inference(_) => {
                CliError::Model(e.to_string())
            }
            other => CliError::Data(other.to_string()),
        }
    }
}

macro_rules! data_error {
    ($($t:ty),*) => {$(
        impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CliError::Data(e.to_string())
            }
        }
    )*};
}

data_error!(IngestError, SamplerError, StatsError, SynthError, std::io::Error, csv::Error, serde_json::Error);

pub type Result<T> = std::result::Result<T, CliError>;
