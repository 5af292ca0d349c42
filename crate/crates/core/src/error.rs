use thiserror::Error;

use crate::sdp::SolveStatus;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is not Hermitian (defect {defect:.3e})")]
    NotHermitian { defect: f64 },

    #[error("matrix is not positive semidefinite (min eigenvalue {min_eigenvalue:.3e})")]
    NotPsd { min_eigenvalue: f64 },

    #[error("angle {angle} outside [{min}, {max}]")]
    AngleOutOfRange { angle: f64, min: f64, max: f64 },

    #[error(
        "Bell weight {weight:.6} is negative at epsilon = {epsilon} (purification round {round})"
    )]
    NegativeWeight {
        epsilon: f64,
        round: u8,
        weight: f64,
    },

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("strategy enumeration limited to k <= {max}, requested k = {requested}")]
    TooManyRounds { requested: usize, max: usize },

    #[error("assemblage element {outcomes}|{inputs} has zero trace")]
    ZeroTraceElement { outcomes: String, inputs: String },

    #[error("ill-formed conic problem: {0}")]
    InvalidProblem(String),

    #[error("solver finished with status {status}{}", context.as_deref().map(|c| format!(" ({c})")).unwrap_or_default())]
    Solver {
        status: SolveStatus,
        context: Option<String>,
    },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Attaches a human-readable location (round, guess string, ...) to solver errors.
    pub fn with_context(self, ctx: impl Into<String>) -> Self {
        match self {
            Error::Solver { status, context } => {
                let ctx = ctx.into();
                Error::Solver {
                    status,
                    context: Some(match context {
                        Some(inner) => format!("{ctx}: {inner}"),
                        None => ctx,
                    }),
                }
            }
            other => other,
        }
    }
}
