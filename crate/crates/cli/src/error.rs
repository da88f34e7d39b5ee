use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("calibration {path}: {source}")]
    Calibration {
        path: PathBuf,
        source: gemmsim::CalibrationError,
    },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("layer file: {0}")]
    Workload(#[from] crate::workload::WorkloadError),
    #[error("{0}")]
    Infeasible(gemmsim::Error),
    #[error("verification failed: {0}")]
    Verification(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Infeasible(_) => 2,
            Self::Verification(_) => 3,
            _ => 1,
        }
    }
}

impl From<gemmsim::Error> for CliError {
    fn from(e: gemmsim::Error) -> Self {
        use gemmsim::Error as E;
        match e {
            E::Calibration(source) => Self::Calibration {
                path: PathBuf::from("<unknown>"),
                source,
            },
            E::InvalidShape { .. } | E::DimensionMismatch(_) => Self::Usage(e.to_string()),
            other => Self::Infeasible(other),
        }
    }
}
