use thiserror::Error;

use crate::general::GeneralSolution;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A field of an input failed validation.
    #[error("invalid `{field}`: {message}")]
    InvalidInput { field: &'static str, message: String },

    /// The participation constraint cannot be met inside the wage box.
    #[error("infeasible instance: {0}")]
    Infeasible(String),

    /// The requested solver does not handle this pair of utilities.
    #[error("unsupported utilities: {0}")]
    Unsupported(String),

    /// A bracketing search failed to find a sign change.
    #[error("no bracket found for {0}")]
    NonBinding(String),

    /// An iterative solver ran out of iterations. `best` carries the last
    /// iterate when one is available.
    #[error("{solver} did not converge after {iterations} iterations (worst KKT residual {worst_residual:.3e})")]
    MaxIterations {
        solver: &'static str,
        iterations: usize,
        worst_residual: f64,
        best: Option<Box<GeneralSolution>>,
    },

    #[error("oracle grid has {points} points, above the {limit} limit")]
    GridTooLarge { points: f64, limit: f64 },

    #[error("every wage sits on a bound; no interior states to test the Borch rule on")]
    NoInteriorStates,

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(field: &'static str, message: impl Into<String>) -> Self {
        Error::InvalidInput { field, message: message.into() }
    }
}
