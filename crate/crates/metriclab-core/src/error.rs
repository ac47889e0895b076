use alloc::string::String;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("point lies outside the domain")]
    OutsideDomain,
    #[error("invalid domain spec: {0}")]
    InvalidSpec(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("exponent {0} is not allowed for this domain")]
    ExponentNotAllowed(String),
    #[error("quadrature did not converge on [{a}, {b}]")]
    QuadratureNonConvergence { a: f64, b: f64 },
    #[error("metric is not positive definite (truncation too low?)")]
    IndefiniteMetric,
    #[error("point lies on the kernel zero set")]
    ZeroSet,
    #[error("nearest boundary point is not unique")]
    FootAmbiguity,
    #[error("point is not within the near-boundary threshold ({distance} >= {threshold})")]
    NotNearBoundary { distance: f64, threshold: f64 },
    #[error("operation not supported for {0}")]
    Unsupported(String),
    #[error("convex solver did not converge after {iterations} Newton steps")]
    SolverNonConvergence { iterations: usize },
    #[error("certified boundary bound {bound} leaves no feasible slack")]
    InfeasibleSlack { bound: f64 },
    #[error("affine disc radius degenerated below 1e-12")]
    DegenerateRadius,
    #[error("direction fan does not span the tangent space")]
    RankDeficient,
    #[error("grid too small for central differences")]
    GridTooSmall,
    #[error("collocation residual {residual:e} above tolerance {tolerance:e}")]
    CollocationResidual { residual: f64, tolerance: f64 },
    #[error("covering-map density failed the curvature check (got {curvature})")]
    CurvatureValidation { curvature: f64 },
    #[error("estimated curvature constant c^2 = {0} is not positive")]
    NonPositiveCurvature(f64),
    #[error("rejection sampling budget exhausted")]
    RejectionBudget,
    #[error("Lu ratio {0} exceeds 1")]
    LuBoundViolated(f64),
    #[error("zero direction")]
    ZeroDirection,
}
