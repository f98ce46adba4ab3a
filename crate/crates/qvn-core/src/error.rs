use thiserror::Error;

/// Errors produced by layout loading, planning and simulation.
#[derive(Debug, Error)]
pub enum QvnError {
    #[error("parse error: {0}")]
    Parse(String),

    /// Names the first violated layout invariant.
    #[error("validation error: {0}")]
    Validation(String),

    #[error("track {track} index {index} is occupied")]
    Obstructed { track: u32, index: i64 },

    #[error("index out of range on track {track}: {index}")]
    OutOfRange { track: u32, index: i64 },

    #[error("strings must share one displacement, got {0} and {1}")]
    MismatchedDisplacement(i64, i64),

    #[error("inter-string spacing must be uniform: {0}")]
    SpacingViolation(String),

    #[error("memory cell ({col},{row}) in zone {zone} is empty")]
    CellEmpty { zone: u32, col: u32, row: u32 },

    #[error("memory cell ({col},{row}) in zone {zone} is not on a static set")]
    CellNotOnStaticSet { zone: u32, col: u32, row: u32 },

    #[error("arm {arm} is not valid for junction {junction}")]
    InvalidArm { junction: u32, arm: u32 },

    #[error("required collection efficiency {0} exceeds 1")]
    InfeasibleCollection(f64),

    #[error("field evaluation point lies on a coil wire")]
    SingularPoint,

    #[error("temperature {t} K outside tabulated range [{lo}, {hi}] K")]
    TemperatureOutOfRange { t: f64, lo: f64, hi: f64 },

    #[error("circuit exceeds layout capacity: {0}")]
    CapacityExceeded(String),

    #[error("no runnable work but circuit incomplete at op {0}")]
    DeadlockDetected(usize),

    #[error("no species triple satisfies the constraints")]
    EmptyResult,

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

impl From<serde_json::Error> for QvnError {
    fn from(e: serde_json::Error) -> Self {
        QvnError::Parse(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, QvnError>;
