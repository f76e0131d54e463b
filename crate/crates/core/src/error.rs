use thiserror::Error;

/// Errors produced by the polarity library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("point {point:?} lies outside the grid box")]
    OutOfBox { point: Vec<f64> },
    #[error("function is not differentiable at {point:?}")]
    NotDifferentiable { point: Vec<f64> },
    #[error("box does not contain the origin as a lattice node: {0}")]
    BoxExcludesOrigin(String),
    #[error("invalid grid shape: {0}")]
    InvalidShape(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid function: {0}")]
    InvalidFunction(String),
    #[error("no finite values in the input")]
    EmptyDomain,
    #[error("epigraph sample is degenerate: {0}")]
    DegenerateEpigraph(String),
    #[error(
        "supremum attained on the input box boundary for {fraction:.4} of the requested nodes"
    )]
    Truncation { fraction: f64 },
    #[error("closed-form rule not available: {0}")]
    Unsupported(String),
    #[error("singular Hessian at {point:?}")]
    SingularHessian { point: Vec<f64> },
    #[error("polar gradient is empty at {point:?} ({reason})")]
    EmptyPolarGradient { point: Vec<f64>, reason: String },
    #[error("frame index {index} is out of range for a path with {len} frames")]
    FrameOutOfRange { index: usize, len: usize },
    #[error("function is linear on the segment towards {point:?}")]
    RayLinearAtY { point: Vec<f64> },
    #[error("advisory check failed: {0}")]
    AdvisoryFailure(String),
    #[error("requested times outside [0, {t_end}]: {time}")]
    TimesOutOfRange { time: f64, t_end: f64 },
    #[error("time {time} lies beyond the estimated maximal time {t_est}")]
    BeyondMaximalTime { time: f64, t_est: f64 },
    #[error("descriptor error: {0}")]
    Descriptor(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Descriptor(e.to_string())
    }
}
