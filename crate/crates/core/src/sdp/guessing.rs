use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::bits::BitString;
use crate::error::{Error, Result};
use crate::lhs::enumerate_strategies;
use crate::linalg::ComplexMatrix;
use crate::measurement::{build_all_assemblages, reduced_alice, MeasurementSchedule};
use crate::states::TwoQubitState;

use super::problem::{ConicProblem, MatrixExpr, Relation, ScalarExpr, Sense, VarId};
use super::steering::{
    projective_functional, steering_weight, SteeringFunctional, ZeroTracePolicy,
};
use super::{ClarabelSolver, ConicSolver, SolveStatus};

/// Largest round count `certify` accepts.
pub const MAX_CERTIFY_ROUNDS: usize = 3;

/// `H_min = -log2(P_G)`.
pub fn min_entropy(p_guess: f64) -> Result<f64> {
    if p_guess.is_nan() || p_guess <= 0.0 || p_guess > 1.0 {
        return Err(Error::InvalidConfig(format!(
            "guessing probability {p_guess} outside (0, 1]"
        )));
    }
    Ok(-p_guess.log2())
}

#[derive(Debug, Clone)]
pub struct GuessOutcome {
    /// Optimal value clamped to `[0, 1]`.
    pub value: f64,
    pub raw_objective: f64,
    pub status: SolveStatus,
    /// Eve's optimal assemblage, one element list per round.
    pub eve: Vec<Vec<ComplexMatrix>>,
}

/// Variables `σ^E_{b⃗_k|y⃗_k}` for rounds `1..=n`, indexed like assemblages.
struct EveVars {
    by_round: Vec<Vec<VarId>>,
}

impl EveVars {
    fn get(&self, b: BitString, y: BitString) -> VarId {
        let k = b.len();
        self.by_round[k - 1][(b.value() << k) + y.value()]
    }
}

/// Eve's optimal probability of guessing `guess` on inputs `y_star`, given
/// that her assemblages must reproduce every round's violation, be causal
/// and no-signalling, and reduce to `rho_a`.
///
/// With `relax_violation` the violation constraints become
/// `Σ tr F σ^E <= v_k` (at least the observed violation).
pub fn guessing_probability(
    functionals: &[SteeringFunctional],
    rho_a: &ComplexMatrix,
    y_star: BitString,
    guess: BitString,
    relax_violation: bool,
    solver: &dyn ConicSolver,
) -> Result<GuessOutcome> {
    let n = functionals.len();
    if n == 0 {
        return Err(Error::InvalidConfig("no steering functionals".into()));
    }
    for (i, f) in functionals.iter().enumerate() {
        if f.round() != i + 1 {
            return Err(Error::InvalidConfig(format!(
                "functional {} is for round {}",
                i + 1,
                f.round()
            )));
        }
    }
    for s in [y_star, guess] {
        if s.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                got: s.len(),
            });
        }
    }

    let mut problem = ConicProblem::new(Sense::Maximize);
    let mut by_round = Vec::with_capacity(n);
    for k in 1..=n {
        let mut vars = Vec::with_capacity(1 << (2 * k));
        for b in BitString::all(k) {
            for y in BitString::all(k) {
                vars.push(problem.add_psd_var(2, format!("E[{b}|{y}]")));
            }
        }
        by_round.push(vars);
    }
    let eve = EveVars { by_round };

    // violations
    let relation = if relax_violation {
        Relation::Le
    } else {
        Relation::Eq
    };
    // Each constraint is homogeneous in (F, v), so dividing both by the
    // coefficient scale leaves it unchanged while keeping the rows well
    // conditioned when F is large.
    for f in functionals {
        let s = f.scale();
        let s = if s > 0.0 { s } else { 1.0 };
        let mut e = ScalarExpr::new();
        for (b, y, coef) in f.iter() {
            e.add(eve.get(b, y), coef.scale(1.0 / s));
        }
        problem.add_scalar(e, relation, f.violation() / s);
    }

    // causality, with the base case Σ_{b1} σ^E_{b1|y1} = ρ_A
    for y1 in 0..2u8 {
        let y = BitString::from_bits(&[y1]);
        let mut e = MatrixExpr::new(2);
        for b1 in 0..2u8 {
            e.add(eve.get(BitString::from_bits(&[b1]), y), 1.0);
        }
        problem.add_matrix_eq(e, rho_a.clone());
    }
    for k in 2..=n {
        for b in BitString::all(k - 1) {
            for y in BitString::all(k - 1) {
                for yk in 0..2u8 {
                    let yy = y.push(yk);
                    let mut e = MatrixExpr::new(2);
                    e.add(eve.get(b.push(0), yy), 1.0)
                        .add(eve.get(b.push(1), yy), 1.0)
                        .add(eve.get(b, y), -1.0);
                    problem.add_matrix_eq(e, ComplexMatrix::zeros(2));
                }
            }
        }
    }

    // no-signalling: Σ_b⃗ σ^E_{b⃗|y⃗} is the same for every y⃗
    for k in 1..=n {
        let reference = BitString::new(k, 0);
        for y in BitString::all(k).skip(1) {
            let mut e = MatrixExpr::new(2);
            for b in BitString::all(k) {
                e.add(eve.get(b, y), 1.0).add(eve.get(b, reference), -1.0);
            }
            problem.add_matrix_eq(e, ComplexMatrix::zeros(2));
        }
    }

    problem.set_objective(ScalarExpr::trace_of(eve.get(guess, y_star), 2));

    let sol = solver.solve(&problem)?;
    if matches!(sol.status, SolveStatus::Infeasible | SolveStatus::Failed) {
        return Err(Error::Solver {
            status: sol.status,
            context: Some(format!("guessing probability for {guess}|{y_star}")),
        });
    }
    let eve_values = eve
        .by_round
        .iter()
        .map(|vars| vars.iter().map(|v| sol.values[v.index()].clone()).collect())
        .collect();
    Ok(GuessOutcome {
        value: sol.objective.clamp(0.0, 1.0),
        raw_objective: sol.objective,
        status: sol.status,
        eve: eve_values,
    })
}

/// Functional used for the final (projective) round.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FinalFunctional {
    /// [`FinalFunctional::Projective`] when the last round's X and Z
    /// measurements are both sharp, otherwise the steering-weight dual.
    #[default]
    Auto,
    /// `α(1 - σ/tr σ)`; zero-probability branches get `α·1`.
    Projective,
    /// The steering-weight dual, as for the earlier rounds.
    SteeringWeight,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CertifyOptions {
    pub alpha: f64,
    pub relax_violation: bool,
    pub tol: f64,
    pub final_functional: FinalFunctional,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        Self {
            alpha: 100.0,
            relax_violation: false,
            tol: 1e-8,
            final_functional: FinalFunctional::Auto,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CertificationReport {
    pub guessing_probability: f64,
    pub min_entropy_bits: f64,
    pub per_round_violations: Vec<f64>,
    /// Steering weights of the rounds whose functional came from the SW dual.
    pub steering_weights: Vec<Option<f64>>,
    pub best_guess: BitString,
    /// `P_G` for each guess string, lexicographic order.
    pub per_guess: Vec<f64>,
    pub solver_status: SolveStatus,
    pub solve_seconds: f64,
}

/// Functionals for rounds `1..=n` of `schedule` on `state`.
pub fn round_functionals(
    state: &TwoQubitState,
    schedule: &MeasurementSchedule,
    options: &CertifyOptions,
    solver: &dyn ConicSolver,
) -> Result<(Vec<SteeringFunctional>, Vec<Option<f64>>)> {
    let n = schedule.n_rounds();
    let last_sharp = schedule.thetas()[n - 1] == 0.0 && schedule.phis()[n - 1] == 0.0;
    let projective_last = match options.final_functional {
        FinalFunctional::Auto => last_sharp,
        FinalFunctional::Projective => true,
        FinalFunctional::SteeringWeight => false,
    };
    let assemblages = build_all_assemblages(state, schedule)?;
    let mut functionals = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    for (i, a) in assemblages.iter().enumerate() {
        let k = i + 1;
        if k == n && projective_last {
            functionals.push(projective_functional(
                a,
                options.alpha,
                ZeroTracePolicy::PenalizeFully,
            )?);
            weights.push(None);
        } else {
            let strategies = enumerate_strategies(k)?;
            let (sw, f) = steering_weight(a, &strategies, solver)
                .map_err(|e| e.with_context(format!("round {k}")))?;
            functionals.push(f);
            weights.push(Some(sw));
        }
    }
    Ok((functionals, weights))
}

/// Runs the full certification for `state` measured according to `schedule`.
pub fn certify(
    state: &TwoQubitState,
    schedule: &MeasurementSchedule,
    options: &CertifyOptions,
) -> Result<CertificationReport> {
    certify_with(
        state,
        schedule,
        options,
        &ClarabelSolver::with_tol(options.tol),
    )
}

pub fn certify_with(
    state: &TwoQubitState,
    schedule: &MeasurementSchedule,
    options: &CertifyOptions,
    solver: &dyn ConicSolver,
) -> Result<CertificationReport> {
    let start = Instant::now();
    let n = schedule.n_rounds();
    if n > MAX_CERTIFY_ROUNDS {
        return Err(Error::TooManyRounds {
            requested: n,
            max: MAX_CERTIFY_ROUNDS,
        });
    }
    let (functionals, steering_weights) = round_functionals(state, schedule, options, solver)?;
    let rho_a = reduced_alice(state);
    let mut status = functionals
        .iter()
        .fold(SolveStatus::Optimal, |acc, f| acc.worst(f.status()));
    let y_star = schedule.y_star();

    let mut per_guess = Vec::with_capacity(1 << n);
    let mut best: Option<(f64, BitString)> = None;
    for guess in BitString::all(n) {
        let out = guessing_probability(
            &functionals,
            &rho_a,
            y_star,
            guess,
            options.relax_violation,
            solver,
        )?;
        status = status.worst(out.status);
        per_guess.push(out.value);
        if best.is_none_or(|(p, _)| out.value > p) {
            best = Some((out.value, guess));
        }
    }
    let (p_guess, best_guess) = best.expect("at least one guess");
    Ok(CertificationReport {
        guessing_probability: p_guess,
        min_entropy_bits: min_entropy(p_guess.max(f64::MIN_POSITIVE))?,
        per_round_violations: functionals.iter().map(|f| f.violation()).collect(),
        steering_weights,
        best_guess,
        per_guess,
        solver_status: status,
        solve_seconds: start.elapsed().as_secs_f64(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sdp::projective_functional;
    use crate::states::{ion_trap_state, pure_state};
    use std::f64::consts::PI;

    fn schedule(n: usize, theta1: f64, phi2: f64, y: &str) -> MeasurementSchedule {
        MeasurementSchedule::standard(n, theta1, phi2, y.parse().unwrap()).unwrap()
    }

    #[test]
    fn min_entropy_examples() {
        assert_eq!(min_entropy(1.0).unwrap(), 0.0);
        assert!((min_entropy(0.5).unwrap() - 1.0).abs() < 1e-15);
        assert!((min_entropy(0.25).unwrap() - 2.0).abs() < 1e-15);
        assert!(min_entropy(0.0).is_err());
        assert!(min_entropy(1.5).is_err());
        assert!(min_entropy(f64::NAN).is_err());
    }

    #[test]
    fn sharp_x_on_phi_plus_gives_one_bit() {
        let r = certify(
            &pure_state(PI / 4.0).unwrap(),
            &schedule(1, 0.0, 0.0, "1"),
            &Default::default(),
        )
        .unwrap();
        assert!((r.guessing_probability - 0.5).abs() < 5e-4);
        assert!((r.min_entropy_bits - 1.0).abs() < 1.5e-3);
        assert_eq!(r.per_guess.len(), 2);
        assert_eq!(r.solver_status, SolveStatus::Optimal);
    }

    #[test]
    fn product_state_gives_no_randomness() {
        for theta in [0.0, 0.4] {
            let r = certify(
                &pure_state(0.0).unwrap(),
                &schedule(1, theta, 0.0, "1"),
                &Default::default(),
            )
            .unwrap();
            assert!(
                r.min_entropy_bits < 1e-5,
                "θ = {theta}: {}",
                r.min_entropy_bits
            );
        }
    }

    #[test]
    fn trivial_measurement_gives_no_randomness() {
        let r = certify(
            &pure_state(PI / 4.0).unwrap(),
            &schedule(1, PI / 4.0, 0.0, "1"),
            &Default::default(),
        )
        .unwrap();
        assert!(r.guessing_probability >= 1.0 - 1e-4);
        assert!(r.steering_weights[0].unwrap() < 1e-6);
    }

    #[test]
    fn honest_eve_is_a_lower_bound() {
        let cases = [
            (pure_state(PI / 5.0).unwrap(), schedule(1, 0.2, 0.0, "1")),
            (pure_state(PI / 4.0).unwrap(), schedule(2, 0.3, 0.0, "10")),
            (
                ion_trap_state(0.02, 0).unwrap(),
                schedule(2, 0.5, 0.0, "11"),
            ),
        ];
        for (state, s) in cases {
            let r = certify(&state, &s, &Default::default()).unwrap();
            let n = s.n_rounds();
            let a = crate::measurement::build_assemblage(&state, &s, n).unwrap();
            let honest = BitString::all(n)
                .map(|b| a.probability(b, s.y_star()))
                .fold(0.0, f64::max);
            assert!(r.guessing_probability >= honest - 1e-6);
            assert!(r.guessing_probability >= 0.5f64.powi(n as i32) - 1e-6);
            assert!(r.guessing_probability <= 1.0 + 1e-6);
        }
    }

    #[test]
    fn best_guess_is_first_maximum() {
        let r = certify(
            &pure_state(PI / 4.0).unwrap(),
            &schedule(1, 0.0, 0.0, "1"),
            &Default::default(),
        )
        .unwrap();
        let max = r.per_guess.iter().cloned().fold(f64::MIN, f64::max);
        let first = r.per_guess.iter().position(|&p| p == max).unwrap();
        assert_eq!(r.best_guess.value(), first);
    }

    #[test]
    fn final_functional_choices() {
        let state = pure_state(PI / 4.0).unwrap();
        let s = schedule(1, 0.3, 0.0, "1");
        let solver = ClarabelSolver::default();
        let auto = CertifyOptions::default();
        let (_, w) = round_functionals(&state, &s, &auto, &solver).unwrap();
        assert!(
            w[0].is_some(),
            "non-sharp final round uses the steering-weight dual"
        );
        let forced = CertifyOptions {
            final_functional: FinalFunctional::Projective,
            ..auto.clone()
        };
        let (f, w) = round_functionals(&state, &s, &forced, &solver).unwrap();
        assert!(w[0].is_none());
        assert_eq!(f[0].alpha(), Some(100.0));
        let (_, w) =
            round_functionals(&state, &schedule(2, 0.3, 0.0, "10"), &auto, &solver).unwrap();
        assert!(w[0].is_some() && w[1].is_none());
    }

    #[test]
    fn relaxed_violation_never_lowers_guessing_probability() {
        let state = pure_state(PI / 6.0).unwrap();
        let s = schedule(1, 0.25, 0.0, "1");
        let strict = certify(&state, &s, &Default::default()).unwrap();
        let relaxed = certify(
            &state,
            &s,
            &CertifyOptions {
                relax_violation: true,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(relaxed.guessing_probability >= strict.guessing_probability - 1e-6);
    }

    #[test]
    fn argument_errors() {
        let state = pure_state(PI / 4.0).unwrap();
        let s = schedule(1, 0.0, 0.0, "1");
        let a = crate::measurement::build_assemblage(&state, &s, 1).unwrap();
        let f = projective_functional(&a, 100.0, ZeroTracePolicy::Reject).unwrap();
        let rho = reduced_alice(&state);
        let solver = ClarabelSolver::default();
        let one = BitString::from_bits(&[1]);
        assert!(guessing_probability(&[], &rho, one, one, false, &solver).is_err());
        let two = BitString::from_bits(&[1, 0]);
        assert!(
            guessing_probability(std::slice::from_ref(&f), &rho, two, one, false, &solver).is_err()
        );
        assert!(guessing_probability(&[f.clone(), f], &rho, two, two, false, &solver).is_err());
        let four = MeasurementSchedule::new(
            vec![0.1, 0.1, 0.1, 0.0],
            vec![0.0; 4],
            "1010".parse().unwrap(),
        )
        .unwrap();
        assert!(matches!(
            certify(&state, &four, &Default::default()),
            Err(Error::TooManyRounds { .. })
        ));
    }

    #[test]
    fn options_deserialize_with_defaults() {
        let o: CertifyOptions = serde_json::from_str(r#"{"alpha": 20}"#).unwrap();
        assert_eq!(o.alpha, 20.0);
        assert_eq!(o.tol, 1e-8);
        assert_eq!(o.final_functional, FinalFunctional::Auto);
    }
}
