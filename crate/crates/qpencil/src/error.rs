use thiserror::Error;

use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("branch pole: {0}")]
    BranchPole(String),
    #[error("chart degenerate: {0}")]
    ChartDegenerate(String),
    #[error("unrecognized pencil profile: {0}")]
    UnrecognizedProfile(String),
    #[error("indeterminate point: {0}")]
    Indeterminate(String),
    #[error("root pair mismatch: results differ by {0:e}")]
    RootPairMismatch(Real),
    #[error("point is off the pencil fiber (residual {0:e})")]
    OffPencilFiber(Real),
    #[error("image collapsed to the zero vector")]
    CollapsedImage,
    #[error("point lies on the base curve; lambda is indeterminate")]
    OnBaseQuadric,
    #[error("lambda is infinite at this point")]
    InfiniteLambda,
    #[error("fixed coordinate is not affine: {0}")]
    NonAffine(String),
    #[error("constraint violated: {0}")]
    ConstraintViolated(String),
    #[error("degenerate parameter: {0}")]
    DegenerateParameter(String),
    #[error("configuration is not symmetric: {0}")]
    NotSymmetric(String),
    #[error("probe failed: {0}")]
    ProbeFailed(String),
    #[error("lift inconsistent: residual {0:e}")]
    LiftInconsistent(Real),
    #[error("stage {stage} failed: {cause}")]
    StageError { stage: String, cause: Box<Error> },
    #[error("precision exhausted at step {step} (estimated relative error {estimate:e})")]
    PrecisionExhausted { step: usize, estimate: Real },
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
