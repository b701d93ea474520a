use std::path::PathBuf;

use thiserror::Error;

use dce_core::dynamics::DynamicsError;
use dce_core::spectral::SpectralError;
use dce_core::statespace::StateError;

pub const EXIT_OTHER: u8 = 1;
pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_TRUNCATION: u8 = 3;
pub const EXIT_NORM_DRIFT: u8 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    State(#[from] StateError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("not converged: {0}")]
    NotConverged(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Dynamics(e) => match e {
                DynamicsError::TruncationOverflow { .. } => EXIT_TRUNCATION,
                DynamicsError::NormDriftExceeded { .. } => EXIT_NORM_DRIFT,
                DynamicsError::Config(_) => EXIT_CONFIG,
                DynamicsError::State(s) => state_code(s),
                _ => EXIT_OTHER,
            },
            CliError::State(s) => state_code(s),
            CliError::Spectral(_) | CliError::Io { .. } | CliError::NotConverged(_) => EXIT_OTHER,
        }
    }
}

fn state_code(e: &StateError) -> u8 {
    match e {
        StateError::InvalidSpec(_) => EXIT_CONFIG,
        StateError::NormDrift { .. } => EXIT_NORM_DRIFT,
        StateError::Dimension { .. } => EXIT_OTHER,
    }
}
