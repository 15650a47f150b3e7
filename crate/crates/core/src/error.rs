use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid problem: {0}")]
    InvalidProblem(String),

    #[error("length mismatch: expected {expected}, found {found}")]
    ShapeMismatch { expected: usize, found: usize },

    #[error("non-finite value {value} at {location}")]
    NonFinite { location: String, value: f64 },

    #[error("mobility exponent {exponent} at {location} exceeds the representable range")]
    MobilityRange { location: String, exponent: f64 },

    #[error("interaction kernel is not finite at displacement {displacement:?}")]
    SingularKernel { displacement: Vec<f64> },

    #[error("zero pivot in row {row}")]
    ZeroPivot { row: usize },

    #[error("row {row} is not strictly diagonally dominant")]
    NotDominant { row: usize },

    #[error("linear solver did not converge after {iterations} iterations (relative residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("second-order step requires the previous time level")]
    MissingHistory,

    #[error("negative density {value} in cell {index}")]
    NegativeDensity { index: usize, value: f64 },

    #[error("total mass {0} is not positive")]
    NonPositiveMass(f64),

    #[error("limiter precondition violated: {0}")]
    LimiterPrecondition(String),

    #[error("no admissible neighbourhood around cell {anchor}")]
    NoAdmissibleSet { anchor: usize },

    #[error("time step must be positive and finite, got {0}")]
    InvalidTimeStep(f64),
}
