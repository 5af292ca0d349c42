use crate::bits::BitString;
use crate::error::{Error, Result};
use crate::lhs::DeterministicStrategy;
use crate::linalg::ComplexMatrix;
use crate::measurement::Assemblage;

use super::problem::{ConicProblem, MatrixExpr, ScalarExpr, Sense};
use super::{ConicSolver, Solution, SolveStatus};

/// Tolerance below which an assemblage element counts as having zero trace.
pub const ZERO_TRACE_TOL: f64 = 1e-12;

/// Slack added on top of the exact shift in
/// [`SteeringFunctional::restore_feasibility`].
const FEASIBILITY_MARGIN: f64 = 1e-12;

/// Steering inequality coefficients `F_{b⃗|y⃗}` with the value `v` the
/// ideal assemblage attains on them.
#[derive(Debug, Clone)]
pub struct SteeringFunctional {
    round: usize,
    coefficients: Vec<ComplexMatrix>,
    violation: f64,
    alpha: Option<f64>,
    status: SolveStatus,
}

impl SteeringFunctional {
    /// Coefficients in assemblage index order; `violation` is computed
    /// against `assemblage`.
    pub fn new(
        coefficients: Vec<ComplexMatrix>,
        assemblage: &Assemblage,
        alpha: Option<f64>,
    ) -> Result<Self> {
        let round = assemblage.round();
        if coefficients.len() != 1 << (2 * round) {
            return Err(Error::LengthMismatch {
                expected: 1 << (2 * round),
                got: coefficients.len(),
            });
        }
        let mut f = Self {
            round,
            coefficients,
            violation: 0.0,
            alpha,
            status: SolveStatus::Optimal,
        };
        f.violation = f.pairing(assemblage);
        Ok(f)
    }

    pub fn round(&self) -> usize {
        self.round
    }

    pub fn violation(&self) -> f64 {
        self.violation
    }

    pub fn alpha(&self) -> Option<f64> {
        self.alpha
    }

    /// Verdict of the solve that produced the coefficients; `Optimal` for
    /// closed-form functionals.
    pub fn status(&self) -> SolveStatus {
        self.status
    }

    /// Largest entry magnitude over all coefficients.
    pub fn scale(&self) -> f64 {
        self.coefficients
            .iter()
            .map(|f| f.max_abs())
            .fold(0.0, f64::max)
    }

    pub fn get(&self, b: BitString, y: BitString) -> &ComplexMatrix {
        &self.coefficients[(b.value() << self.round) + y.value()]
    }

    /// `(b⃗, y⃗, F)` triples in index order.
    pub fn iter(&self) -> impl Iterator<Item = (BitString, BitString, &ComplexMatrix)> {
        let k = self.round;
        self.coefficients.iter().enumerate().map(move |(i, m)| {
            (
                BitString::new(k, (i >> k) as u32),
                BitString::new(k, (i & ((1 << k) - 1)) as u32),
                m,
            )
        })
    }

    /// `Σ_{b⃗,y⃗} tr(F_{b⃗|y⃗} σ_{b⃗|y⃗})`.
    pub fn pairing(&self, assemblage: &Assemblage) -> f64 {
        assert_eq!(assemblage.round(), self.round);
        self.iter()
            .map(|(b, y, f)| f.trace_product(assemblage.get(b, y)))
            .sum()
    }

    /// `Σ_{b⃗,y⃗} D(b⃗|y⃗,λ) F_{b⃗|y⃗} - 1` for one strategy.
    pub fn lhs_operator(&self, strategy: &DeterministicStrategy) -> ComplexMatrix {
        BitString::all(self.round)
            .map(|y| self.get(strategy.output(y), y))
            .fold(ComplexMatrix::identity(2).scale(-1.0), |acc, f| &acc + f)
    }

    /// Adds the smallest multiple of the identity to every coefficient that
    /// makes `F ⪰ 0` and every LHS bound operator PSD, then recomputes the
    /// violation. Returns the shift applied.
    pub fn restore_feasibility(
        &mut self,
        assemblage: &Assemblage,
        strategies: &[DeterministicStrategy],
    ) -> Result<f64> {
        let inputs = (1usize << self.round) as f64;
        let deficit = (-self.min_coefficient_eigenvalue()?)
            .max(-self.min_lhs_eigenvalue(strategies)? / inputs);
        if deficit <= 0.0 {
            return Ok(0.0);
        }
        let shift = deficit + FEASIBILITY_MARGIN;
        let id = ComplexMatrix::identity(2).scale(shift);
        for f in &mut self.coefficients {
            *f = (&*f + &id).hermitian_part();
        }
        self.violation = self.pairing(assemblage);
        Ok(shift)
    }

    /// Smallest eigenvalue over all coefficients.
    pub fn min_coefficient_eigenvalue(&self) -> Result<f64> {
        self.coefficients
            .iter()
            .try_fold(f64::INFINITY, |acc, f| Ok(acc.min(f.min_eigenvalue()?)))
    }

    /// Smallest eigenvalue of the LHS bound operator over `strategies`.
    pub fn min_lhs_eigenvalue(&self, strategies: &[DeterministicStrategy]) -> Result<f64> {
        strategies.iter().try_fold(f64::INFINITY, |acc, d| {
            Ok(acc.min(self.lhs_operator(d).hermitian_part().min_eigenvalue()?))
        })
    }
}

/// Primal program: the largest total weight of local-hidden-state
/// components `σ_λ ⪰ 0` that fits under every element,
/// `σ_{b⃗|y⃗} - Σ_λ D(b⃗|y⃗, λ) σ_λ ⪰ 0`. Returns the solution and the index
/// of each element's constraint, in assemblage order.
fn solve_primal(
    assemblage: &Assemblage,
    strategies: &[DeterministicStrategy],
    solver: &dyn ConicSolver,
) -> Result<(Solution, Vec<usize>)> {
    let k = assemblage.round();
    if let Some(d) = strategies.iter().find(|d| d.round() != k) {
        return Err(Error::LengthMismatch {
            expected: k,
            got: d.round(),
        });
    }
    let mut problem = ConicProblem::new(Sense::Maximize);
    let vars: Vec<_> = (0..strategies.len())
        .map(|i| problem.add_psd_var(2, format!("lhs[{i}]")))
        .collect();
    let mut objective = ScalarExpr::new();
    for &v in &vars {
        objective.add(v, ComplexMatrix::identity(2));
    }
    problem.set_objective(objective);
    let mut residual: Vec<MatrixExpr> = assemblage
        .iter()
        .map(|(_, _, sigma)| MatrixExpr::new(2).with_constant(sigma.clone()))
        .collect();
    for (d, &v) in strategies.iter().zip(&vars) {
        for y in BitString::all(k) {
            residual[assemblage.index(d.output(y), y)].add(v, -1.0);
        }
    }
    let rows = residual.into_iter().map(|e| problem.add_psd(e)).collect();
    let sol = solver.solve(&problem)?;
    if matches!(sol.status, SolveStatus::Infeasible | SolveStatus::Failed) {
        return Err(Error::Solver {
            status: sol.status,
            context: Some(format!("steering weight, round {k}")),
        });
    }
    Ok((sol, rows))
}

/// Steering weight and the steering inequality that certifies it. Returns
/// `(SW, F)` with `SW = 1 - F.violation()`, where `F` maximizes
/// `1 - Σ tr(F σ)` subject to `Σ_y⃗ F_{D(y⃗)|y⃗} ⪰ 1` for every strategy and
/// `F ⪰ 0`.
///
/// `F` is read off the multipliers of the primal program rather than
/// solved for directly: on rank-deficient assemblages the dual supremum is
/// not attained and a direct solve drifts along an unbounded optimal face,
/// while the primal converges with a certified gap. The multipliers are
/// then shifted to be exactly dual feasible, so `SW` is always a valid
/// lower bound. The solver verdict is kept on the functional.
pub fn steering_weight(
    assemblage: &Assemblage,
    strategies: &[DeterministicStrategy],
    solver: &dyn ConicSolver,
) -> Result<(f64, SteeringFunctional)> {
    let (sol, rows) = solve_primal(assemblage, strategies, solver)?;
    let coefficients = rows
        .iter()
        .map(|&r| sol.psd_duals[r].hermitian_part())
        .collect();
    let mut functional = SteeringFunctional::new(coefficients, assemblage, None)?;
    functional.status = sol.status;
    functional.restore_feasibility(assemblage, strategies)?;
    let sw = (1.0 - functional.violation()).clamp(0.0, 1.0);
    Ok((sw, functional))
}

/// Steering weight from the primal objective alone.
pub fn steering_weight_primal(
    assemblage: &Assemblage,
    strategies: &[DeterministicStrategy],
    solver: &dyn ConicSolver,
) -> Result<f64> {
    let (sol, _) = solve_primal(assemblage, strategies, solver)?;
    if sol.status != SolveStatus::Optimal {
        return Err(Error::Solver {
            status: sol.status,
            context: Some(format!(
                "primal steering weight, round {}",
                assemblage.round()
            )),
        });
    }
    Ok((1.0 - sol.objective).clamp(0.0, 1.0))
}

/// What [`projective_functional`] does with zero-probability branches.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ZeroTracePolicy {
    /// Fail with [`Error::ZeroTraceElement`].
    #[default]
    Reject,
    /// Use `F = α·1`, penalizing any weight Eve places on the branch.
    PenalizeFully,
}

/// The explicit functional `F = α(1 - σ/tr σ)` for a projective final round.
pub fn projective_functional(
    assemblage: &Assemblage,
    alpha: f64,
    policy: ZeroTracePolicy,
) -> Result<SteeringFunctional> {
    if alpha.is_nan() || alpha <= 0.0 {
        return Err(Error::InvalidConfig(format!(
            "alpha must be positive, got {alpha}"
        )));
    }
    let id = ComplexMatrix::identity(2);
    let coefficients = assemblage
        .iter()
        .map(|(b, y, sigma)| {
            let tr = sigma.trace_re();
            if tr <= ZERO_TRACE_TOL {
                return match policy {
                    ZeroTracePolicy::Reject => Err(Error::ZeroTraceElement {
                        outcomes: b.to_string(),
                        inputs: y.to_string(),
                    }),
                    ZeroTracePolicy::PenalizeFully => Ok(id.scale(alpha)),
                };
            }
            Ok((&id - &sigma.scale(1.0 / tr)).scale(alpha))
        })
        .collect::<Result<Vec<_>>>()?;
    SteeringFunctional::new(coefficients, assemblage, Some(alpha))
}
