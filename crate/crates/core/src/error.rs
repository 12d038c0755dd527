use std::path::PathBuf;

use thiserror::Error;

/// Why an attempted time step (or a constitutive solve inside it) failed.
///
/// These are recoverable: the adaptive controller shrinks the step and retries.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum StepFailure {
    #[error("weighted mass matrix W(v) is numerically singular (pivot {pivot:e} below {threshold:e})")]
    SingularWeightedMass { pivot: f64, threshold: f64 },
    #[error("Newton iteration did not converge in {iterations} iterations (residual {residual:e})")]
    NewtonDivergence { iterations: usize, residual: f64 },
    #[error("Newton linear system is singular at row {row}")]
    SingularJacobian { row: usize },
    #[error("step result has an indefinite W(v) (Cholesky pivot {pivot:e} at row {row})")]
    IndefiniteWeightedMass { row: usize, pivot: f64 },
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Step(#[from] StepFailure),
    #[error("time step underflow at t = {t}: dt = {dt:e} < dt_min = {dt_min:e}")]
    DtUnderflow { t: f64, dt: f64, dt_min: f64 },
    #[error("matrix is not positive definite (pivot {pivot:e} at row {row})")]
    NotPositiveDefinite { row: usize, pivot: f64 },
    #[error("initial profile has no negative slope, no shock forms")]
    NoShock,
    #[error("no developed front detected (max slope {max_slope} <= threshold {threshold})")]
    NoFront { max_slope: f64, threshold: f64 },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
