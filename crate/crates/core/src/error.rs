use thiserror::Error;

use crate::qp::QpStatus;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A configuration or type invariant is violated; `field` is the dotted path.
    #[error("{field}: {reason}")]
    Invalid { field: String, reason: String },

    #[error("non-finite values in {0}")]
    NonFinite(&'static str),

    #[error("inertia matrix is singular")]
    SingularInertia,

    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    Dimension {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("no stance legs: the robot has no support")]
    NoSupport,

    #[error("degenerate foot geometry: front and rear feet share the same x coordinate")]
    DegenerateFeet,

    #[error("QP solve failed at t={t:.3}s: status {status:?}, residual {residual:.3e} after {iterations} iterations")]
    Solver {
        t: f64,
        status: QpStatus,
        residual: f64,
        iterations: usize,
    },

    #[error("simulation diverged at t={t:.3}s (|state| = {magnitude:.3e})")]
    Diverged { t: f64, magnitude: f64 },

    #[error("foot {leg} at x={x:.3} is outside the terrain")]
    OffTerrain { leg: usize, x: f64 },

    #[error("config parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Invalid {
            field: field.into(),
            reason: reason.into(),
        }
    }
}
