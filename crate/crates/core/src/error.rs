use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("band limit {band_limit} exceeds what the grid of design degree {design} resolves")]
    Resolution { band_limit: usize, design: usize },

    #[error("point is not on the unit sphere (|x| = {norm})")]
    Domain { norm: f64 },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("prescribed function is not positive (minimum {min} on the grid)")]
    Positivity { min: f64 },

    #[error("conformal factor too large to exponentiate (max |3w| = {max_abs})")]
    Overflow { max_abs: f64 },

    #[error("chart singularity: {0}")]
    ChartSingularity(String),

    #[error("{what} did not converge after {iterations} iterations (residual {residual:e})")]
    NonConvergence { what: String, iterations: usize, residual: f64 },

    #[error("step size fell below {dt_min:e} at t = {t}")]
    StepCollapse { t: f64, dt_min: f64 },

    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    #[error("{path}: {source}")]
    Io { path: PathBuf, #[source] source: std::io::Error },

    #[error("{path}:{line}: {message}")]
    Config { path: PathBuf, line: usize, message: String },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io { path: path.into(), source }
    }
}
