//! Bob's noisy X/Z measurements and the assemblages they steer Alice into.

use std::f64::consts::FRAC_PI_4;

use serde::{Deserialize, Serialize};

use crate::bits::BitString;
use crate::error::{Error, Result};
use crate::linalg::{pauli, ComplexMatrix, Subsystem};
use crate::states::TwoQubitState;

/// Measurement setting. `X` is input `1`, `Z` is input `0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Basis {
    X,
    Z,
}

impl Basis {
    pub fn from_input(y: u8) -> Self {
        if y == 1 {
            Basis::X
        } else {
            Basis::Z
        }
    }

    pub fn input(self) -> u8 {
        match self {
            Basis::X => 1,
            Basis::Z => 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Outcome {
    Plus,
    Minus,
}

impl Outcome {
    pub fn from_bit(b: u8) -> Self {
        if b == 0 {
            Outcome::Plus
        } else {
            Outcome::Minus
        }
    }

    pub fn bit(self) -> u8 {
        match self {
            Outcome::Plus => 0,
            Outcome::Minus => 1,
        }
    }
}

fn check_angle(angle: f64) -> Result<()> {
    if !(0.0..=FRAC_PI_4 + 1e-15).contains(&angle) {
        return Err(Error::AngleOutOfRange {
            angle,
            min: 0.0,
            max: FRAC_PI_4,
        });
    }
    Ok(())
}

/// One Kraus branch of a noisy X or Z measurement.
#[derive(Debug, Clone)]
pub struct KrausOp {
    pub basis: Basis,
    pub angle: f64,
    pub outcome: Outcome,
    pub matrix: ComplexMatrix,
}

/// Kraus operator `cos(a) P_b + sin(a) P_{-b}`, where `P_±` are the
/// eigenprojectors of the chosen Pauli basis (`|±>` for X, `|0>,|1>` for Z).
pub fn kraus(basis: Basis, angle: f64, outcome: Outcome) -> Result<KrausOp> {
    check_angle(angle)?;
    let (keep, flip) = match (basis, outcome) {
        (Basis::X, Outcome::Plus) => (pauli::ket_plus(), pauli::ket_minus()),
        (Basis::X, Outcome::Minus) => (pauli::ket_minus(), pauli::ket_plus()),
        (Basis::Z, Outcome::Plus) => (pauli::ket0(), pauli::ket1()),
        (Basis::Z, Outcome::Minus) => (pauli::ket1(), pauli::ket0()),
    };
    let matrix = &ComplexMatrix::outer(&keep).scale(angle.cos())
        + &ComplexMatrix::outer(&flip).scale(angle.sin());
    Ok(KrausOp {
        basis,
        angle,
        outcome,
        matrix,
    })
}

/// POVM element `Π†Π`.
pub fn povm_element(k: &KrausOp) -> ComplexMatrix {
    &k.matrix.dagger() * &k.matrix
}

/// Per-round measurement angles and the input string Bob certifies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementSchedule {
    thetas: Vec<f64>,
    phis: Vec<f64>,
    y_star: BitString,
}

impl MeasurementSchedule {
    /// Angles must lie in `[0, π/4]`. With two or more rounds the last round
    /// must be projective (`θ_n = φ_n = 0`); a single round may be noisy.
    pub fn new(thetas: Vec<f64>, phis: Vec<f64>, y_star: BitString) -> Result<Self> {
        let n = thetas.len();
        if n == 0 {
            return Err(Error::InvalidSchedule("at least one round required".into()));
        }
        if phis.len() != n || y_star.len() != n {
            return Err(Error::InvalidSchedule(format!(
                "{} thetas, {} phis and a {}-round target string",
                n,
                phis.len(),
                y_star.len()
            )));
        }
        for &a in thetas.iter().chain(&phis) {
            check_angle(a)?;
        }
        if n >= 2 && (thetas[n - 1] != 0.0 || phis[n - 1] != 0.0) {
            return Err(Error::InvalidSchedule(
                "the final round of a multi-round schedule must be projective".into(),
            ));
        }
        Ok(Self {
            thetas,
            phis,
            y_star,
        })
    }

    /// Noisy X in round 1 (projective Z test), projective afterwards except
    /// for an optional noisy Z angle in round 2.
    pub fn standard(n_rounds: usize, theta1: f64, phi2: f64, y_star: BitString) -> Result<Self> {
        let mut thetas = vec![0.0; n_rounds];
        let mut phis = vec![0.0; n_rounds];
        if n_rounds > 0 {
            thetas[0] = theta1;
        }
        if n_rounds > 2 {
            phis[1] = phi2;
        } else if phi2 != 0.0 && n_rounds == 2 {
            return Err(Error::InvalidSchedule(
                "phi2 must be zero when round 2 is the final round".into(),
            ));
        }
        Self::new(thetas, phis, y_star)
    }

    pub fn n_rounds(&self) -> usize {
        self.thetas.len()
    }

    pub fn thetas(&self) -> &[f64] {
        &self.thetas
    }

    pub fn phis(&self) -> &[f64] {
        &self.phis
    }

    pub fn y_star(&self) -> BitString {
        self.y_star
    }

    /// Angle used in `round` (0-based) for the given input bit.
    pub fn angle(&self, round: usize, y: u8) -> f64 {
        match Basis::from_input(y) {
            Basis::X => self.thetas[round],
            Basis::Z => self.phis[round],
        }
    }

    /// Kraus operator applied in `round` (0-based) for input `y`, outcome `b`.
    pub fn kraus_at(&self, round: usize, y: u8, b: u8) -> KrausOp {
        kraus(
            Basis::from_input(y),
            self.angle(round, y),
            Outcome::from_bit(b),
        )
        .expect("angles validated at construction")
    }

    /// `Π_{b_k|y_k} ⋯ Π_{b_1|y_1}` for the first `b.len()` rounds.
    pub fn kraus_product(&self, b: BitString, y: BitString) -> ComplexMatrix {
        (0..b.len()).fold(ComplexMatrix::identity(2), |acc, i| {
            &self.kraus_at(i, y.get(i), b.get(i)).matrix * &acc
        })
    }
}

/// Alice's unnormalized conditional states after `round` measurements.
#[derive(Debug, Clone)]
pub struct Assemblage {
    round: usize,
    elements: Vec<ComplexMatrix>,
}

impl Assemblage {
    /// Elements indexed densely by `b.value() * 2^k + y.value()`.
    pub fn from_elements(round: usize, elements: Vec<ComplexMatrix>) -> Result<Self> {
        let expected = 1usize << (2 * round);
        if round == 0 || elements.len() != expected {
            return Err(Error::LengthMismatch {
                expected,
                got: elements.len(),
            });
        }
        Ok(Self { round, elements })
    }

    /// Builds a round-`k` assemblage from a function of `(b⃗, y⃗)`.
    pub fn from_fn(round: usize, mut f: impl FnMut(BitString, BitString) -> ComplexMatrix) -> Self {
        let mut elements = Vec::with_capacity(1 << (2 * round));
        for b in BitString::all(round) {
            for y in BitString::all(round) {
                elements.push(f(b, y));
            }
        }
        Self { round, elements }
    }

    pub fn round(&self) -> usize {
        self.round
    }

    pub fn index(&self, b: BitString, y: BitString) -> usize {
        debug_assert!(b.len() == self.round && y.len() == self.round);
        (b.value() << self.round) + y.value()
    }

    pub fn get(&self, b: BitString, y: BitString) -> &ComplexMatrix {
        &self.elements[self.index(b, y)]
    }

    /// `(b⃗, y⃗, σ)` triples in index order.
    pub fn iter(&self) -> impl Iterator<Item = (BitString, BitString, &ComplexMatrix)> {
        let k = self.round;
        self.elements.iter().enumerate().map(move |(i, m)| {
            (
                BitString::new(k, (i >> k) as u32),
                BitString::new(k, (i & ((1 << k) - 1)) as u32),
                m,
            )
        })
    }

    pub fn probability(&self, b: BitString, y: BitString) -> f64 {
        self.get(b, y).trace_re()
    }

    /// `Σ_b⃗ σ_{b⃗|y⃗}`.
    pub fn marginal(&self, y: BitString) -> ComplexMatrix {
        BitString::all(self.round)
            .map(|b| self.get(b, y))
            .fold(ComplexMatrix::zeros(2), |acc, m| &acc + m)
    }

    /// Largest violation of `Σ_b⃗ σ_{b⃗|y⃗} = ρ_A` over inputs.
    pub fn normalization_defect(&self, rho_a: &ComplexMatrix) -> f64 {
        BitString::all(self.round)
            .map(|y| self.marginal(y).max_abs_diff(rho_a))
            .fold(0.0, f64::max)
    }

    /// Largest violation of `Σ_{b_k} σ_{b⃗_k|y⃗_k} = σ_{b⃗_{k-1}|y⃗_{k-1}}`.
    pub fn causality_defect(&self, previous: &Assemblage) -> f64 {
        assert_eq!(previous.round + 1, self.round);
        let mut worst = 0.0_f64;
        for b in BitString::all(previous.round) {
            for y in BitString::all(previous.round) {
                for yk in 0..2 {
                    let yy = y.push(yk);
                    let sum = self.get(b.push(0), yy) + self.get(b.push(1), yy);
                    worst = worst.max(sum.max_abs_diff(previous.get(b, y)));
                }
            }
        }
        worst
    }

    /// Smallest eigenvalue over all elements.
    pub fn min_eigenvalue(&self) -> Result<f64> {
        self.elements
            .iter()
            .map(|m| m.min_eigenvalue())
            .try_fold(f64::INFINITY, |acc, e| Ok(acc.min(e?)))
    }
}

/// `tr_B ρ_AB`.
pub fn reduced_alice(state: &TwoQubitState) -> ComplexMatrix {
    state
        .rho()
        .partial_trace((2, 2), Subsystem::A)
        .expect("two-qubit state")
}

/// Ideal assemblage after the first `k` rounds of `schedule`:
/// `σ_{b⃗|y⃗} = tr_B[(1 ⊗ K) ρ_AB (1 ⊗ K†)]` with `K = Π_{b_k|y_k} ⋯ Π_{b_1|y_1}`.
pub fn build_assemblage(
    state: &TwoQubitState,
    schedule: &MeasurementSchedule,
    k: usize,
) -> Result<Assemblage> {
    if k == 0 || k > schedule.n_rounds() {
        return Err(Error::InvalidSchedule(format!(
            "round count {k} outside 1..={}",
            schedule.n_rounds()
        )));
    }
    let id = ComplexMatrix::identity(2);
    Ok(Assemblage::from_fn(k, |b, y| {
        let op = id.kron(&schedule.kraus_product(b, y));
        let post = &(&op * state.rho()) * &op.dagger();
        post.partial_trace((2, 2), Subsystem::A)
            .expect("4x4")
            .hermitian_part()
    }))
}

/// Assemblages for rounds `1..=n`.
pub fn build_all_assemblages(
    state: &TwoQubitState,
    schedule: &MeasurementSchedule,
) -> Result<Vec<Assemblage>> {
    (1..=schedule.n_rounds())
        .map(|k| build_assemblage(state, schedule, k))
        .collect()
}
