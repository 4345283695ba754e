use thiserror::Error;

/// Errors surfaced by the library. Every fallible operation returns one of
/// these rather than panicking, so the CLI can map failures to exit codes
/// and machine-readable records.
#[derive(Debug, Error)]
pub enum Error {
    /// Malformed arguments: dimension mismatches, non-finite values,
    /// out-of-range parameters.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A point that must lie in the feasible set (or a shrunken copy) does not.
    #[error("infeasible point: {0}")]
    Infeasible(String),

    /// The equilibrium solver hit its iteration cap before reaching tolerance.
    #[error("equilibrium solver stalled: residual {residual:.3e} after {iterations} iterations (tol {tol:.1e})")]
    SolverFailure {
        residual: f64,
        iterations: u64,
        tol: f64,
    },

    /// A requested oracle or estimator mode is not available for this game.
    #[error("unsupported mode: {0}")]
    UnsupportedMode(String),

    /// Target accuracy lies above the admissible threshold for the game.
    #[error("target accuracy {requested:.6e} out of range: must lie below {admissible_max:.6e}")]
    AccuracyOutOfRange { requested: f64, admissible_max: f64 },

    /// A step-size schedule produced a non-positive or missing step.
    #[error("invalid step schedule: {0}")]
    InvalidSchedule(String),

    /// A curve or run is too short for the requested analysis.
    #[error("insufficient horizon: {0}")]
    InsufficientHorizon(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Stable machine-readable code for serialized error records.
    pub fn code(&self) -> &'static str {
        match self {
            Error::InvalidInput(_) => "invalid-input",
            Error::Infeasible(_) => "infeasible",
            Error::SolverFailure { .. } => "solver-failure",
            Error::UnsupportedMode(_) => "unsupported-mode",
            Error::AccuracyOutOfRange { .. } => "accuracy-out-of-range",
            Error::InvalidSchedule(_) => "invalid-schedule",
            Error::InsufficientHorizon(_) => "insufficient-horizon",
        }
    }
}
