//! Semidefinite programs for steering and randomness certification.
//!
//! [`problem`] holds a solver-agnostic conic IR, [`backend`] the Clarabel
//! adapter, [`steering`] the steering-weight dual and the explicit
//! functional for projective final rounds, and [`guessing`] the sequential
//! guessing-probability program plus the end-to-end certification.

pub mod backend;
pub mod guessing;
pub mod problem;
pub mod steering;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::linalg::ComplexMatrix;

pub use backend::ClarabelSolver;
pub use guessing::{
    certify, certify_with, guessing_probability, min_entropy, CertificationReport, CertifyOptions,
    FinalFunctional, GuessOutcome,
};
pub use problem::{ConicProblem, MatrixExpr, Relation, Residuals, ScalarExpr, Sense, VarId};
pub use steering::{
    projective_functional, steering_weight, steering_weight_primal, SteeringFunctional,
    ZeroTracePolicy,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Optimal,
    Inaccurate,
    Infeasible,
    Failed,
}

impl SolveStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::Inaccurate => "inaccurate",
            SolveStatus::Infeasible => "infeasible",
            SolveStatus::Failed => "failed",
        }
    }

    /// The less favourable of two verdicts.
    pub fn worst(self, other: SolveStatus) -> SolveStatus {
        self.max(other)
    }
}

impl fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub status: SolveStatus,
    pub objective: f64,
    /// One value per declared variable, in declaration order.
    pub values: Vec<ComplexMatrix>,
    /// Multiplier `Y ⪰ 0` of each PSD constraint, in the order of
    /// `ConicProblem::psd_constraints`. At an optimum of a maximization,
    /// `Σ Re tr(Y E(X))` accounts for the gap between the objective and its
    /// dual bound, and complementary slackness gives `Re tr(Y E(X*)) = 0`.
    pub psd_duals: Vec<ComplexMatrix>,
    pub residuals: Residuals,
    pub iterations: u32,
    pub solve_seconds: f64,
}

/// Anything that can solve a [`ConicProblem`].
pub trait ConicSolver: Send + Sync {
    fn solve(&self, problem: &ConicProblem) -> Result<Solution>;
}
