use thiserror::Error;

/// Errors produced by the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown metric `{0}`")]
    UnknownMetric(String),

    #[error("missing parameter `{param}` for metric `{metric}`")]
    MissingParam { metric: String, param: String },

    #[error("domain guard `{guard}` violated at {point:?}")]
    Domain { point: [f64; 4], guard: String },

    #[error("non-finite value while evaluating {0}")]
    Eval(String),

    #[error("spatial metric is singular (det = {0})")]
    SingularMetric(f64),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("focusing hypothesis violated: {0}")]
    HypothesisViolated(String),

    #[error("expansion stays bounded on [0, {0}]")]
    NoBlowup(f64),

    #[error("step size underflow at lambda = {0}")]
    StepFailure(f64),

    #[error("force is undefined on a spatial geodesic (ds*/dlambda = 0)")]
    SpatialGeodesic,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
