use thiserror::Error;

/// Rejections raised while building or parsing a [`crate::DiscreteMeasure`].
#[derive(Debug, Clone, PartialEq, Error)]
pub enum MeasureError {
    #[error("atom location {0} is not finite")]
    NonFiniteLocation(f64),
    #[error("atom at {x} has invalid mass {p}")]
    InvalidMass { x: f64, p: f64 },
    #[error("duplicate atom location {0}")]
    DuplicateLocation(f64),
    #[error("total mass {0} lies outside [0, 1]")]
    TotalOutOfRange(f64),
    #[error("operation requires a probability measure, total mass is {0}")]
    NotProbability(f64),
    #[error("measure has no atoms")]
    Empty,
}

/// Rejections raised while building barrier documents.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum BarrierError {
    #[error("barrier coordinate {0} is not finite")]
    NonFinite(f64),
    #[error("v-line at {level} has depth {depth} above its level")]
    DepthAboveLevel { level: f64, depth: f64 },
    #[error("h-line at {level} has right end {right} left of its level")]
    RightBelowLevel { level: f64, right: f64 },
    #[error("time threshold {0} is negative or NaN")]
    InvalidThreshold(f64),
    #[error("duplicate time-space level {0}")]
    DuplicateLevel(f64),
    #[error("step map breakpoints must be strictly increasing with non-decreasing values")]
    NonMonotoneStepMap,
    #[error("stop level {value} exceeds its maximum level {from}")]
    StopAboveMax { from: f64, value: f64 },
}

/// Failures of the exact engine and the Monte Carlo sampler.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum EngineError {
    #[error("state (pos {pos}, max {max}, min {min}) carries mass {mass} but can never reach the barrier")]
    NonTerminating { pos: f64, max: f64, min: f64, mass: f64 },
    #[error("stopped masses sum to {total}, expected 1")]
    MassLeak { total: f64 },
    #[error("atom-stop mass {stop} at {x} exceeds the starting mass {start}")]
    AtomStopExceedsStart { x: f64, stop: f64, start: f64 },
    #[error("path {path} exceeded the step cap of {cap}")]
    PathBudgetExceeded { path: u64, cap: u64 },
    #[error("{0} cannot be evaluated by the exact engine")]
    Unsupported(&'static str),
    #[error(transparent)]
    Measure(#[from] MeasureError),
}

/// Failures of the Perkins calibration.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum CalibrationError {
    #[error("starting law is not prior to the target law in convex order")]
    ConvexOrderViolated,
    #[error("calibration stalled at residual {residual:e} after {iterations} sweeps")]
    NoProgress {
        residual: f64,
        iterations: usize,
        best: Box<crate::calibration::CalibrationResult>,
    },
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Measure(#[from] MeasureError),
}
