use std::path::PathBuf;

use skorokhod::{CalibrationError, EngineError, MeasureError};
use thiserror::Error;

/// Failure of a command, carrying its process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}: {source}", path.display())]
    Parse { path: PathBuf, source: serde_json::Error },
    #[error("invalid input: {0}")]
    Input(String),
    #[error("starting law is not below the target in convex order")]
    ConvexOrder,
    #[error(transparent)]
    Calibration(CalibrationError),
    #[error(transparent)]
    Engine(EngineError),
    #[error("verification failed: {0}")]
    Verification(String),
}

impl CliError {
    /// 0 success, 1 I/O or parse failure, 2 convex-order violation,
    /// 3 no convergence or no termination, 4 failed audit or verification.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Io { .. } | CliError::Parse { .. } | CliError::Input(_) => 1,
            CliError::ConvexOrder => 2,
            CliError::Calibration(_) => 3,
            CliError::Engine(e) => engine_code(e),
            CliError::Verification(_) => 4,
        }
    }
}

fn engine_code(e: &EngineError) -> u8 {
    match e {
        EngineError::NonTerminating { .. } | EngineError::MassLeak { .. } | EngineError::PathBudgetExceeded { .. } => 3,
        EngineError::AtomStopExceedsStart { .. } => 4,
        EngineError::Unsupported(_) | EngineError::Measure(_) => 1,
    }
}

impl From<MeasureError> for CliError {
    fn from(e: MeasureError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<EngineError> for CliError {
    fn from(e: EngineError) -> Self {
        match e {
            EngineError::Measure(m) => m.into(),
            e => CliError::Engine(e),
        }
    }
}

impl From<CalibrationError> for CliError {
    fn from(e: CalibrationError) -> Self {
        match e {
            CalibrationError::ConvexOrderViolated => CliError::ConvexOrder,
            CalibrationError::Engine(e) => e.into(),
            CalibrationError::Measure(m) => m.into(),
            e @ CalibrationError::NoProgress { .. } => CliError::Calibration(e),
        }
    }
}
