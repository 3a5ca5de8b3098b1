use thiserror::Error;

pub type Result<T, E = LabError> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LabError {
    #[error("dimension n = {0} is too small (need n >= 3)")]
    DimensionTooSmall(u32),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("iota = {0} is invalid (need iota >= 1)")]
    InvalidIota(f64),
    #[error("exponent p = {0} is invalid here (need p >= 0)")]
    InvalidExponent(f64),
    #[error("parameters out of regime: {0}")]
    OutOfRegime(String),
    #[error("negative radius {0}")]
    NegativeRadius(f64),
    #[error("coefficient is singular at the origin")]
    OriginSingularity,
    #[error("sampled function does not cover [0, {needed}] (grid ends at {available})")]
    GridMismatch { needed: f64, available: f64 },
    #[error("integration step control failed at r = {r}: {reason}")]
    StepFailure { r: f64, reason: String },
    #[error("solution residual {residual:e} exceeds tolerance {tol:e}")]
    ResidualExceeded { residual: f64, tol: f64 },
    #[error("positivity violated at r = {0}")]
    PositivityViolated(f64),
    #[error("profile covers [0, {available}] but [0, {needed}] is required")]
    DomainTooSmall { needed: f64, available: f64 },
    #[error("test function does not vanish at the boundary (g(R) = {0:e})")]
    SupportViolation(f64),
    #[error("test-function suite is empty")]
    EmptySuite,
    #[error("calibration bracket failed: {0}")]
    Calibration(String),
    #[error("scalar curvature is not constant on the ball")]
    NonconstantCurvature,
    #[error("unknown sweep axis `{0}`")]
    UnknownAxis(String),
    #[error("sweep value list is empty")]
    EmptySweep,
    #[error("config error: {0}")]
    ConfigParse(String),
    #[error("i/o failure: {0}")]
    IoFailure(String),
}

impl LabError {
    /// True for errors that mean "mathematically outside the regime" rather
    /// than a tool failure.
    pub fn is_out_of_regime(&self) -> bool {
        matches!(self, LabError::OutOfRegime(_))
    }
}

impl From<std::io::Error> for LabError {
    fn from(e: std::io::Error) -> Self {
        LabError::IoFailure(e.to_string())
    }
}
