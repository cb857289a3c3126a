use thiserror::Error;

/// Failure modes shared by every module.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("argument {0} lies within the pole exclusion radius of a nonpositive integer")]
    PoleProximity(f64),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("{what} did not converge within a budget of {budget}")]
    NonConvergence { what: &'static str, budget: usize },

    #[error("{what}: tail estimate {estimate:e} exceeds tolerance {tol:e}")]
    TruncationBudget { what: &'static str, estimate: f64, tol: f64 },

    #[error("{what} exceeds the budget of {limit}")]
    Budget { what: &'static str, limit: usize },

    #[error("Picard iteration stalled after {iterations} iterations; contraction ratios {ratios:?}")]
    PicardDivergence { iterations: usize, ratios: Vec<f64> },

    #[error("missing initial data: {0}")]
    MissingInitialData(&'static str),

    #[error("ellipticity violated: {0}")]
    Ellipticity(String),

    #[error("linear solve failed: {0}")]
    LinearSolve(String),

    #[error("domain violation: {0}")]
    Domain(String),

    #[error("i/o failure: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// True for failures caused by exhausted numerical budgets rather than bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NonConvergence { .. }
                | Error::TruncationBudget { .. }
                | Error::Budget { .. }
                | Error::PicardDivergence { .. }
                | Error::LinearSolve(_)
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
