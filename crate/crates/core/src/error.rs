use thiserror::Error;

/// Failures raised anywhere in the simulation / reduction / reconstruction pipeline.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("rotation does not fix the requested axis (|R·u - u| = {deviation:.3e})")]
    AxisNotFixed { deviation: f64 },
    #[error("unit vectors are antipodal; the plane of rotation is undefined")]
    AntipodalInput,
    #[error("similarity fit is degenerate: reference configuration is collinear")]
    DegenerateFit,
    #[error("binary collision between bodies {i} and {j} (distance {distance:.3e})")]
    BinaryCollision { i: usize, j: usize, distance: f64 },
    #[error("triple collision (polar moment of inertia vanishes)")]
    TripleCollision,
    #[error("invalid masses: every mass must be positive and finite")]
    InvalidMasses,
    #[error("integrator step failure at t = {t}: {reason}")]
    StepFailure { t: f64, reason: String },
    #[error("approach to triple collision at t = {t} (I/I0 = {ratio:.3e})")]
    TripleCollisionApproach { t: f64, ratio: f64 },
    #[error("trajectory stays collinear from t = {start} to t = {end}")]
    PersistentlyCollinear { start: f64, end: f64 },
    #[error("inertia eigenframe is degenerate at t = {t} (in-plane gap / I = {gap:.3e})")]
    EigenframeDegenerate { t: f64, gap: f64 },
    #[error("angular-momentum axis has a component along the collinear null axis")]
    UndefinedAtCollinear,
    #[error("horizontal lift failed: {0}")]
    LiftStepFailure(String),
    #[error("shape curve is not closed (spherical distance {distance:.3e})")]
    ShapeNotClosed { distance: f64 },
    #[error("surface leaves the valid coordinate chart: {0}")]
    ChartViolation(String),
    #[error("configurations are not oriented-similar (relative residual {residual:.3e})")]
    NotSimilar { residual: f64 },
    #[error("triangle normal is antiparallel to the angular momentum")]
    AntipodalNormal,
    #[error("precondition violated: {0}")]
    PreconditionViolated(String),
    #[error("conservation budget exceeded (energy drift {energy:.3e}, momentum drift {momentum:.3e})")]
    DriftBudget { energy: f64, momentum: f64 },
    #[error("no shape return found in the run")]
    NoReturn,
    #[error("configuration error: {0}")]
    Config(String),
    #[error("I/O error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
