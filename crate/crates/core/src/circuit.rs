//! State-vector simulation of Bob's measurement circuit: one ancilla per
//! round, each noisy measurement realized as `R_y(2θ)`, `H`, a controlled
//! X (or Z) onto Bob's qubit and a second `H`, with the input string
//! selecting which gate runs in each round.
//!
//! Alice's qubit is carried along so her conditional states can be read out
//! directly. Qubit 0 is Alice, qubits `1..=n` are the ancillas and Bob's
//! qubit is last; qubit 0 is the most significant bit of an amplitude index.
//! This module shares nothing with [`crate::measurement`] beyond the
//! schedule it reads angles from, so the two act as cross-checks.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_4};

use num_complex::Complex64;
use rand::Rng;

use crate::bits::BitString;
use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, C_ONE, C_ZERO};
use crate::measurement::{build_assemblage, MeasurementSchedule};
use crate::states::{ion_trap_state, pure_state, TwoQubitState};

type Gate = [[Complex64; 2]; 2];

fn real_gate(m: [[f64; 2]; 2]) -> Gate {
    m.map(|r| r.map(|x| Complex64::new(x, 0.0)))
}

fn hadamard() -> Gate {
    real_gate([
        [FRAC_1_SQRT_2, FRAC_1_SQRT_2],
        [FRAC_1_SQRT_2, -FRAC_1_SQRT_2],
    ])
}

fn ry(angle: f64) -> Gate {
    let (s, c) = (angle / 2.0).sin_cos();
    real_gate([[c, -s], [s, c]])
}

fn pauli_x() -> Gate {
    real_gate([[0.0, 1.0], [1.0, 0.0]])
}

fn pauli_z() -> Gate {
    real_gate([[1.0, 0.0], [0.0, -1.0]])
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amplitudes: Vec<Complex64>,
}

impl StateVector {
    /// `|0…0>`.
    pub fn zero(n_qubits: usize) -> Self {
        let mut amplitudes = vec![C_ZERO; 1 << n_qubits];
        amplitudes[0] = C_ONE;
        Self {
            n_qubits,
            amplitudes,
        }
    }

    pub fn from_amplitudes(amplitudes: Vec<Complex64>) -> Result<Self> {
        let n_qubits = amplitudes.len().trailing_zeros() as usize;
        if amplitudes.len() != 1 << n_qubits || amplitudes.is_empty() {
            return Err(Error::DimensionMismatch(format!(
                "{} amplitudes is not a power of two",
                amplitudes.len()
            )));
        }
        let sv = Self {
            n_qubits,
            amplitudes,
        };
        if (sv.norm_sqr() - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidState(format!(
                "state vector norm² {} is not 1",
                sv.norm_sqr()
            )));
        }
        Ok(sv)
    }

    /// Places a two-qubit (Alice, Bob) vector into `n_ancillas + 2` qubits
    /// with all ancillas in `|0>`.
    pub fn embed_pair(pair: &[Complex64; 4], n_ancillas: usize) -> Self {
        let n_qubits = n_ancillas + 2;
        let mut amplitudes = vec![C_ZERO; 1 << n_qubits];
        for a in 0..2 {
            for b in 0..2 {
                let idx = (a << (n_qubits - 1)) | b;
                amplitudes[idx] = pair[2 * a + b];
            }
        }
        Self {
            n_qubits,
            amplitudes,
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|z| z.norm_sqr()).sum()
    }

    fn mask(&self, qubit: usize) -> usize {
        1 << (self.n_qubits - 1 - qubit)
    }

    fn check_qubit(&self, q: usize) -> Result<()> {
        if q >= self.n_qubits {
            return Err(Error::DimensionMismatch(format!(
                "qubit {q} out of range for {} qubits",
                self.n_qubits
            )));
        }
        Ok(())
    }

    fn apply_1q(&mut self, qubit: usize, g: &Gate) {
        let m = self.mask(qubit);
        for i in 0..self.amplitudes.len() {
            if i & m == 0 {
                let (a0, a1) = (self.amplitudes[i], self.amplitudes[i | m]);
                self.amplitudes[i] = g[0][0] * a0 + g[0][1] * a1;
                self.amplitudes[i | m] = g[1][0] * a0 + g[1][1] * a1;
            }
        }
    }

    fn apply_controlled(&mut self, control: usize, target: usize, g: &Gate) {
        let (mc, mt) = (self.mask(control), self.mask(target));
        for i in 0..self.amplitudes.len() {
            if i & mc != 0 && i & mt == 0 {
                let (a0, a1) = (self.amplitudes[i], self.amplitudes[i | mt]);
                self.amplitudes[i] = g[0][0] * a0 + g[0][1] * a1;
                self.amplitudes[i | mt] = g[1][0] * a0 + g[1][1] * a1;
            }
        }
    }

    /// Unnormalized projection of `qubit` onto `|bit>`.
    pub fn project(&self, qubit: usize, bit: u8) -> Self {
        let m = self.mask(qubit);
        let keep = if bit == 0 { 0 } else { m };
        let amplitudes = self
            .amplitudes
            .iter()
            .enumerate()
            .map(|(i, &z)| if i & m == keep { z } else { C_ZERO })
            .collect();
        Self {
            n_qubits: self.n_qubits,
            amplitudes,
        }
    }

    /// Flips `qubit`.
    pub fn apply_x(&self, qubit: usize) -> Self {
        let mut out = self.clone();
        out.apply_1q(qubit, &pauli_x());
        out
    }

    /// Alice's unnormalized state given the listed ancillas' outcomes,
    /// tracing out Bob. `ancilla_bits` pairs ancilla qubit with its bit.
    fn alice_block(&self, ancilla_bits: &[(usize, u8)]) -> ComplexMatrix {
        let alice = self.mask(0);
        let mut sigma = ComplexMatrix::zeros(2);
        let matches = |i: usize| {
            ancilla_bits
                .iter()
                .all(|&(q, b)| ((i & self.mask(q)) != 0) == (b == 1))
        };
        // Sum over Bob's bit and over unconstrained ancillas.
        for i in 0..self.amplitudes.len() {
            if i & alice != 0 || !matches(i) {
                continue;
            }
            let j = i | alice;
            let (a0, a1) = (self.amplitudes[i], self.amplitudes[j]);
            let acc = [
                [a0 * a0.conj(), a0 * a1.conj()],
                [a1 * a0.conj(), a1 * a1.conj()],
            ];
            for (r, row) in acc.iter().enumerate() {
                for (c, &v) in row.iter().enumerate() {
                    sigma.set(r, c, sigma.get(r, c) + v);
                }
            }
        }
        sigma
    }
}

fn check_pair(sv: &StateVector, ancilla: usize, target: usize) -> Result<()> {
    sv.check_qubit(ancilla)?;
    sv.check_qubit(target)?;
    if ancilla == target {
        return Err(Error::DimensionMismatch(
            "ancilla and target must differ".into(),
        ));
    }
    Ok(())
}

fn noisy_gate(
    ancilla: usize,
    target: usize,
    angle: f64,
    sv: &StateVector,
    ctrl: &Gate,
) -> Result<StateVector> {
    check_pair(sv, ancilla, target)?;
    let mut out = sv.clone();
    out.apply_1q(ancilla, &ry(2.0 * angle));
    out.apply_1q(ancilla, &hadamard());
    out.apply_controlled(ancilla, target, ctrl);
    out.apply_1q(ancilla, &hadamard());
    Ok(out)
}

/// Noisy X measurement coupling: ancilla `|0>`/`|1>` flags outcome +1/-1.
pub fn gate_xtheta(
    ancilla: usize,
    target: usize,
    theta: f64,
    sv: &StateVector,
) -> Result<StateVector> {
    noisy_gate(ancilla, target, theta, sv, &pauli_x())
}

/// Noisy Z measurement coupling, identical to [`gate_xtheta`] with a
/// controlled Z.
pub fn gate_zphi(ancilla: usize, target: usize, phi: f64, sv: &StateVector) -> Result<StateVector> {
    noisy_gate(ancilla, target, phi, sv, &pauli_z())
}

/// How ancillas are allocated and read out.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AncillaMode {
    /// One ancilla per round, all measured after the last round.
    #[default]
    Deferred,
    /// One ancilla per round, each measured right after its round.
    Immediate,
    /// A single ancilla, measured each round and reset to `|0>`.
    SingleReset,
}

#[derive(Debug, Clone)]
pub struct Branch {
    pub outcomes: BitString,
    pub probability: f64,
    /// Alice's unnormalized conditional state.
    pub sigma: ComplexMatrix,
}

impl Branch {
    /// Normalized conditional state, or zero for an impossible branch.
    pub fn conditional_state(&self) -> ComplexMatrix {
        if self.probability > 0.0 {
            self.sigma.scale(1.0 / self.probability)
        } else {
            ComplexMatrix::zeros(2)
        }
    }
}

fn apply_round(
    sv: &StateVector,
    ancilla: usize,
    schedule: &MeasurementSchedule,
    round: usize,
    y: u8,
) -> Result<StateVector> {
    let target = sv.n_qubits() - 1;
    if y == 1 {
        gate_xtheta(ancilla, target, schedule.thetas()[round], sv)
    } else {
        gate_zphi(ancilla, target, schedule.phis()[round], sv)
    }
}

/// Outcome distribution and Alice's conditional states for the first
/// `y.len()` rounds of `schedule`, simulated on a pure (Alice, Bob) vector.
pub fn simulate_pure(
    pair: &[Complex64; 4],
    schedule: &MeasurementSchedule,
    y: BitString,
    mode: AncillaMode,
) -> Result<Vec<(BitString, ComplexMatrix)>> {
    let n = y.len();
    if n == 0 || n > schedule.n_rounds() {
        return Err(Error::InvalidSchedule(format!(
            "input string of length {n} for a {}-round schedule",
            schedule.n_rounds()
        )));
    }
    match mode {
        AncillaMode::Deferred => {
            let mut sv = StateVector::embed_pair(pair, n);
            for r in 0..n {
                sv = apply_round(&sv, r + 1, schedule, r, y.get(r))?;
            }
            Ok(BitString::all(n)
                .map(|b| {
                    let bits: Vec<(usize, u8)> = (0..n).map(|r| (r + 1, b.get(r))).collect();
                    (b, sv.alice_block(&bits))
                })
                .collect())
        }
        AncillaMode::Immediate => {
            let mut branches = vec![(BitString::empty(), StateVector::embed_pair(pair, n))];
            for r in 0..n {
                let mut next = Vec::with_capacity(branches.len() * 2);
                for (prefix, sv) in branches {
                    let sv = apply_round(&sv, r + 1, schedule, r, y.get(r))?;
                    for bit in 0..2 {
                        next.push((prefix.push(bit), sv.project(r + 1, bit)));
                    }
                }
                branches = next;
            }
            Ok(branches
                .into_iter()
                .map(|(b, sv)| (b, sv.alice_block(&[])))
                .collect())
        }
        AncillaMode::SingleReset => {
            let mut branches = vec![(BitString::empty(), StateVector::embed_pair(pair, 1))];
            for r in 0..n {
                let mut next = Vec::with_capacity(branches.len() * 2);
                for (prefix, sv) in branches {
                    let sv = apply_round(&sv, 1, schedule, r, y.get(r))?;
                    for bit in 0..2 {
                        let mut p = sv.project(1, bit);
                        if bit == 1 {
                            p = p.apply_x(1);
                        }
                        next.push((prefix.push(bit), p));
                    }
                }
                branches = next;
            }
            Ok(branches
                .into_iter()
                .map(|(b, sv)| (b, sv.alice_block(&[])))
                .collect())
        }
    }
}

/// [`simulate_pure`] averaged over the state's pure-state ensemble.
pub fn simulate_protocol(
    state: &TwoQubitState,
    schedule: &MeasurementSchedule,
    y: BitString,
    mode: AncillaMode,
) -> Result<Vec<Branch>> {
    let n = y.len();
    let mut sigmas = vec![ComplexMatrix::zeros(2); 1 << n];
    for (weight, pair) in state.ensemble()? {
        for (b, sigma) in simulate_pure(&pair, schedule, y, mode)? {
            sigmas[b.value()] = &sigmas[b.value()] + &sigma.scale(weight);
        }
    }
    Ok(BitString::all(n)
        .zip(sigmas)
        .map(|(outcomes, sigma)| Branch {
            outcomes,
            probability: sigma.trace_re(),
            sigma,
        })
        .collect())
}

/// Largest deviation between the circuit and the Kraus engine over all
/// outcome strings: outcome probabilities against `tr σ`, and conditional
/// states against normalized assemblage elements.
pub fn kraus_deviation(
    state: &TwoQubitState,
    schedule: &MeasurementSchedule,
    y: BitString,
    mode: AncillaMode,
) -> Result<f64> {
    let assemblage = build_assemblage(state, schedule, y.len())?;
    let mut worst: f64 = 0.0;
    for branch in simulate_protocol(state, schedule, y, mode)? {
        let sigma = assemblage.get(branch.outcomes, y);
        let p = sigma.trace_re();
        worst = worst.max((branch.probability - p).abs());
        if p > 0.0 {
            let expected = sigma.scale(1.0 / p);
            worst = worst.max(branch.conditional_state().max_abs_diff(&expected));
        }
    }
    Ok(worst)
}

/// A random oracle case with at most three rounds: a pure or ion-trap
/// state, angles drawn from `[0, π/4]` with a sharp final round when
/// `n >= 2`, and a random input string.
pub fn random_case<R: Rng>(rng: &mut R) -> Result<(TwoQubitState, MeasurementSchedule, BitString)> {
    let n = rng.gen_range(1..=3);
    let state = if rng.gen_bool(0.5) {
        pure_state(rng.gen_range(0.0..=FRAC_PI_4))?
    } else {
        ion_trap_state(rng.gen_range(0.0..0.3), rng.gen_range(0..=3))?
    };
    let mut thetas: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..=FRAC_PI_4)).collect();
    let mut phis: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..=FRAC_PI_4)).collect();
    if n >= 2 {
        thetas[n - 1] = 0.0;
        phis[n - 1] = 0.0;
    }
    let y = BitString::new(n, rng.gen_range(0..1u32 << n));
    let schedule = MeasurementSchedule::new(thetas, phis, y)?;
    Ok((state, schedule, y))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measurement::{kraus, Basis, Outcome};
    use crate::states::{bell_state, BellState};
    use std::f64::consts::PI;

    fn ket(a: f64, b: f64) -> [Complex64; 2] {
        [Complex64::new(a, 0.0), Complex64::new(b, 0.0)]
    }

    /// Two qubits: ancilla 0, target 1 in state `t`.
    fn ancilla_and(t: [Complex64; 2]) -> StateVector {
        StateVector::from_amplitudes(vec![t[0], t[1], C_ZERO, C_ZERO]).unwrap()
    }

    fn branch_target(sv: &StateVector, bit: u8) -> [Complex64; 2] {
        let base = if bit == 0 { 0 } else { 2 };
        [sv.amplitudes()[base], sv.amplitudes()[base + 1]]
    }

    #[test]
    fn projective_x_on_eigenstate_is_deterministic() {
        let h = FRAC_1_SQRT_2;
        let sv = gate_xtheta(0, 1, 0.0, &ancilla_and(ket(h, h))).unwrap();
        let p0: f64 = branch_target(&sv, 0).iter().map(|z| z.norm_sqr()).sum();
        assert!((p0 - 1.0).abs() < 1e-14);
    }

    #[test]
    fn trivial_measurement_leaves_target_alone() {
        let t = ket(0.6, 0.8);
        for gate in [gate_xtheta, gate_zphi] {
            let sv = gate(0, 1, FRAC_PI_4, &ancilla_and(t)).unwrap();
            for bit in 0..2 {
                let v = branch_target(&sv, bit);
                let p: f64 = v.iter().map(|z| z.norm_sqr()).sum();
                assert!((p - 0.5).abs() < 1e-14);
                // proportional to t
                let cross = v[0] * t[1] - v[1] * t[0];
                assert!(cross.norm() < 1e-14);
            }
        }
    }

    #[test]
    fn noisy_gates_match_kraus_operators() {
        let cases = [
            (Basis::X, 0.2, ket(1.0, 0.0)),
            (Basis::Z, 0.08, ket(FRAC_1_SQRT_2, FRAC_1_SQRT_2)),
        ];
        for (basis, angle, t) in cases {
            let sv = match basis {
                Basis::X => gate_xtheta(0, 1, angle, &ancilla_and(t)).unwrap(),
                Basis::Z => gate_zphi(0, 1, angle, &ancilla_and(t)).unwrap(),
            };
            for (bit, outcome) in [(0, Outcome::Plus), (1, Outcome::Minus)] {
                let k = kraus(basis, angle, outcome).unwrap().matrix;
                let expect = [
                    k.get(0, 0) * t[0] + k.get(0, 1) * t[1],
                    k.get(1, 0) * t[0] + k.get(1, 1) * t[1],
                ];
                let got = branch_target(&sv, bit);
                assert!((got[0] - expect[0]).norm() < 1e-14);
                assert!((got[1] - expect[1]).norm() < 1e-14);
                let p: f64 = got.iter().map(|z| z.norm_sqr()).sum();
                assert!((p - 0.5).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn projective_z_on_one() {
        let sv = gate_zphi(0, 1, 0.0, &ancilla_and(ket(0.0, 1.0))).unwrap();
        let p1: f64 = branch_target(&sv, 1).iter().map(|z| z.norm_sqr()).sum();
        assert!((p1 - 1.0).abs() < 1e-14);
    }

    #[test]
    fn gates_preserve_norm() {
        let mut sv = StateVector::embed_pair(&BellState::PsiMinus.amplitudes(), 3);
        for (i, a) in [0.1, 0.5, 0.7].iter().enumerate() {
            sv = gate_xtheta(i + 1, 4, *a, &sv).unwrap();
            assert!((sv.norm_sqr() - 1.0).abs() < 1e-12);
            sv = gate_zphi(i + 1, 4, *a, &sv).unwrap();
            assert!((sv.norm_sqr() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn index_errors() {
        let sv = StateVector::zero(2);
        assert!(gate_xtheta(0, 0, 0.1, &sv).is_err());
        assert!(gate_zphi(0, 5, 0.1, &sv).is_err());
    }

    #[test]
    fn phi_plus_projective_x() {
        let s = MeasurementSchedule::new(vec![0.0], vec![0.0], "1".parse().unwrap()).unwrap();
        let out = simulate_protocol(
            &pure_state(PI / 4.0).unwrap(),
            &s,
            "1".parse().unwrap(),
            AncillaMode::Deferred,
        )
        .unwrap();
        let plus = ComplexMatrix::outer(&crate::linalg::pauli::ket_plus());
        let minus = ComplexMatrix::outer(&crate::linalg::pauli::ket_minus());
        assert!((out[0].probability - 0.5).abs() < 1e-14);
        assert!(out[0].conditional_state().max_abs_diff(&plus) < 1e-14);
        assert!(out[1].conditional_state().max_abs_diff(&minus) < 1e-14);
    }

    #[test]
    fn product_state_stays_in_zero() {
        let s = MeasurementSchedule::standard(3, 0.3, 0.2, "101".parse().unwrap()).unwrap();
        let zero = ComplexMatrix::diag(&[1.0, 0.0]);
        for y in BitString::all(3) {
            for b in
                simulate_protocol(&pure_state(0.0).unwrap(), &s, y, AncillaMode::Deferred).unwrap()
            {
                if b.probability > 1e-14 {
                    assert!(b.conditional_state().max_abs_diff(&zero) < 1e-12);
                }
            }
        }
    }

    #[test]
    fn modes_agree() {
        let s = MeasurementSchedule::standard(3, 0.3, 0.15, "101".parse().unwrap()).unwrap();
        let st = bell_state(BellState::PhiPlus);
        for y in BitString::all(3) {
            let d = simulate_protocol(&st, &s, y, AncillaMode::Deferred).unwrap();
            for mode in [AncillaMode::Immediate, AncillaMode::SingleReset] {
                let o = simulate_protocol(&st, &s, y, mode).unwrap();
                for (a, b) in d.iter().zip(&o) {
                    assert_eq!(a.outcomes, b.outcomes);
                    assert!(a.sigma.max_abs_diff(&b.sigma) < 1e-14);
                }
            }
        }
    }

    #[test]
    fn two_round_distribution_matches_kraus_engine() {
        let s = MeasurementSchedule::standard(2, 0.3, 0.0, "10".parse().unwrap()).unwrap();
        let st = bell_state(BellState::PhiPlus);
        let y = "10".parse().unwrap();
        let out = simulate_protocol(&st, &s, y, AncillaMode::Deferred).unwrap();
        let total: f64 = out.iter().map(|b| b.probability).sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert!(kraus_deviation(&st, &s, y, AncillaMode::Deferred).unwrap() < 1e-10);
    }

    #[test]
    fn mixed_states_match_kraus_engine() {
        let s = MeasurementSchedule::standard(3, 0.2, 0.1, "101".parse().unwrap()).unwrap();
        for st in [
            crate::states::ion_trap_state(0.15, 1).unwrap(),
            pure_state(0.4).unwrap(),
        ] {
            for y in BitString::all(3) {
                assert!(kraus_deviation(&st, &s, y, AncillaMode::SingleReset).unwrap() < 1e-10);
            }
        }
    }

    #[test]
    fn schedule_mismatch_is_an_error() {
        let s = MeasurementSchedule::standard(1, 0.2, 0.0, "1".parse().unwrap()).unwrap();
        let st = pure_state(0.3).unwrap();
        assert!(simulate_protocol(&st, &s, "10".parse().unwrap(), AncillaMode::Deferred).is_err());
        assert!(simulate_protocol(&st, &s, BitString::empty(), AncillaMode::Deferred).is_err());
    }
}
