use thiserror::Error;

/// Every failure the solvers and checks can report.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid dimension n = {0}")]
    InvalidDimension(i64),

    #[error("invalid measure {0}: must be positive and finite")]
    InvalidMeasure(f64),

    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("subcriticality violation: p = {p} is outside the admissible interval {interval} for n = {n}")]
    SubcriticalityViolation { n: usize, p: f64, interval: String },

    #[error("no zero of the radial profile found before r = {r_max}")]
    NoZeroFound { r_max: f64 },

    #[error("resolution too coarse: h = {h} leaves no interior cells")]
    ResolutionTooCoarse { h: f64 },

    #[error("gradient flow stalled after {iterations} iterations at quotient {quotient}")]
    FlowStalled { iterations: usize, quotient: f64 },

    #[error("quotient undefined for the zero field")]
    UndefinedQuotient,

    #[error("source has no solution: {0}")]
    NoSolution(String),

    #[error("unsupported source: {0}")]
    UnsupportedSource(String),

    #[error("minimization did not converge after {iterations} iterations (best value {best})")]
    Nonconvergence { iterations: usize, best: f64 },

    #[error("inconsistent inputs: {0}")]
    InconsistentInputs(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

impl Error {
    /// Short machine-readable tag used in error JSON.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidDimension(_) => "invalid-dimension",
            Error::InvalidMeasure(_) => "invalid-measure",
            Error::InvalidGeometry(_) => "invalid-geometry",
            Error::SubcriticalityViolation { .. } => "subcriticality-violation",
            Error::NoZeroFound { .. } => "no-zero-found",
            Error::ResolutionTooCoarse { .. } => "resolution-too-coarse",
            Error::FlowStalled { .. } => "flow-stalled",
            Error::UndefinedQuotient => "undefined-quotient",
            Error::NoSolution(_) => "no-solution",
            Error::UnsupportedSource(_) => "unsupported-source",
            Error::Nonconvergence { .. } => "nonconvergence",
            Error::InconsistentInputs(_) => "inconsistent-inputs",
            Error::InvalidParameter(_) => "invalid-parameter",
        }
    }

    /// True for failures caused by the configuration rather than by a solver.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            Error::InvalidDimension(_)
                | Error::InvalidMeasure(_)
                | Error::InvalidGeometry(_)
                | Error::SubcriticalityViolation { .. }
                | Error::InvalidParameter(_)
                | Error::InconsistentInputs(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
