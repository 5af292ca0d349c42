//! Two-qubit states: partially entangled pure states, Bell states and the
//! Bell-diagonal states produced by a networked ion-trap link before and
//! after entanglement purification.
//!
//! Qubit order is (Alice, Bob); Bell states are always listed in the order
//! `(Φ⁺, Φ⁻, Ψ⁺, Ψ⁻)`.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_4};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, C_ZERO};

const TRACE_TOL: f64 = 1e-10;
const PSD_TOL: f64 = 1e-9;
const SQRT_CLIP: f64 = 1e-10;

/// Where a state came from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StateLabel {
    Pure {
        zeta: f64,
    },
    IonTrap {
        epsilon: f64,
        purification_round: u8,
    },
    Custom,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BellState {
    PhiPlus,
    PhiMinus,
    PsiPlus,
    PsiMinus,
}

impl BellState {
    pub const ALL: [BellState; 4] = [
        BellState::PhiPlus,
        BellState::PhiMinus,
        BellState::PsiPlus,
        BellState::PsiMinus,
    ];

    /// Amplitudes over `|00>, |01>, |10>, |11>`.
    pub fn amplitudes(self) -> [Complex64; 4] {
        let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
        match self {
            BellState::PhiPlus => [h, C_ZERO, C_ZERO, h],
            BellState::PhiMinus => [h, C_ZERO, C_ZERO, -h],
            BellState::PsiPlus => [C_ZERO, h, h, C_ZERO],
            BellState::PsiMinus => [C_ZERO, h, -h, C_ZERO],
        }
    }

    pub fn density(self) -> ComplexMatrix {
        ComplexMatrix::outer(&self.amplitudes())
    }
}

/// Normalized two-qubit density matrix with its provenance.
#[derive(Debug, Clone)]
pub struct TwoQubitState {
    rho: ComplexMatrix,
    label: StateLabel,
}

impl TwoQubitState {
    /// Validates `rho` as a 4x4 density matrix.
    pub fn new(rho: ComplexMatrix, label: StateLabel) -> Result<Self> {
        if rho.dim() != 4 {
            return Err(Error::DimensionMismatch(format!(
                "two-qubit state needs a 4x4 matrix, got {0}x{0}",
                rho.dim()
            )));
        }
        let defect = rho.hermiticity_defect();
        if defect > 1e-10 {
            return Err(Error::NotHermitian { defect });
        }
        let tr = rho.trace();
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Err(Error::InvalidState(format!("trace {tr} is not 1")));
        }
        let min_eigenvalue = rho.min_eigenvalue()?;
        if min_eigenvalue < -PSD_TOL {
            return Err(Error::NotPsd { min_eigenvalue });
        }
        Ok(Self { rho, label })
    }

    /// A custom state from a normalized pure two-qubit vector.
    pub fn from_pure_vector(psi: &[Complex64; 4]) -> Result<Self> {
        let norm: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidState(format!(
                "state vector has norm² {norm}"
            )));
        }
        Self::new(ComplexMatrix::outer(psi), StateLabel::Custom)
    }

    pub fn rho(&self) -> &ComplexMatrix {
        &self.rho
    }

    pub fn label(&self) -> StateLabel {
        self.label
    }

    /// A pure-state ensemble `{(p_i, |ψ_i>)}` whose mixture is this state.
    ///
    /// Labelled states use their defining decomposition (a single vector, or
    /// the Bell components); custom states fall back to the eigendecomposition.
    pub fn ensemble(&self) -> Result<Vec<(f64, [Complex64; 4])>> {
        match self.label {
            StateLabel::Pure { zeta } => Ok(vec![(1.0, pure_amplitudes(zeta))]),
            StateLabel::IonTrap {
                epsilon,
                purification_round,
            } => {
                let w = ion_trap_weights(epsilon, purification_round)?;
                Ok(BellState::ALL
                    .iter()
                    .zip(w)
                    .filter(|(_, p)| *p > 0.0)
                    .map(|(b, p)| (p, b.amplitudes()))
                    .collect())
            }
            StateLabel::Custom => {
                let (values, vectors) = self.rho.hermitian_eigen()?;
                Ok(values
                    .iter()
                    .enumerate()
                    .filter(|(_, &p)| p > 1e-14)
                    .map(|(c, &p)| {
                        let v = [0, 1, 2, 3].map(|r| vectors.get(r, c));
                        (p, v)
                    })
                    .collect())
            }
        }
    }
}

fn pure_amplitudes(zeta: f64) -> [Complex64; 4] {
    [
        Complex64::new(zeta.cos(), 0.0),
        C_ZERO,
        C_ZERO,
        Complex64::new(zeta.sin(), 0.0),
    ]
}

/// `cos ζ |00> + sin ζ |11>` for `ζ ∈ [0, π/4]`.
pub fn pure_state(zeta: f64) -> Result<TwoQubitState> {
    if !(0.0..=FRAC_PI_4 + 1e-15).contains(&zeta) {
        return Err(Error::AngleOutOfRange {
            angle: zeta,
            min: 0.0,
            max: FRAC_PI_4,
        });
    }
    TwoQubitState::new(
        ComplexMatrix::outer(&pure_amplitudes(zeta)),
        StateLabel::Pure { zeta },
    )
}

/// Bell-diagonal mixture with weights over `(Φ⁺, Φ⁻, Ψ⁺, Ψ⁻)`.
pub fn bell_diagonal(weights: [f64; 4], label: StateLabel) -> Result<TwoQubitState> {
    let rho = BellState::ALL
        .iter()
        .zip(weights)
        .map(|(b, w)| b.density().scale(w))
        .fold(ComplexMatrix::zeros(4), |acc, m| &acc + &m);
    TwoQubitState::new(rho, label)
}

/// The printed polynomial Bell weights of the ion-trap state after
/// `round` purification rounds, before renormalization.
pub fn ion_trap_weights_raw(epsilon: f64, round: u8) -> Result<[f64; 4]> {
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(Error::InvalidState(format!(
            "infidelity {epsilon} outside [0, 1]"
        )));
    }
    let e = epsilon;
    let e2 = e * e;
    let e3 = e2 * e;
    let w = match round {
        0 => [1.0 - e, e / 3.0, e / 3.0, e / 3.0],
        1 => [
            1.0 - 2.0 / 3.0 * e - 2.0 / 3.0 * e2,
            2.0 / 9.0 * e + 2.0 / 9.0 * e2,
            2.0 / 9.0 * e2,
            2.0 / 9.0 * e2,
        ],
        2 => [
            1.0 - 8.0 / 9.0 * e2 - 8.0 / 27.0 * e3,
            4.0 / 9.0 * e2,
            4.0 / 9.0 * e2,
            8.0 / 27.0 * e3,
        ],
        3 => [
            1.0 - 2.0 / 9.0 * e2 - 16.0 / 27.0 * e3,
            2.0 / 9.0 * e2,
            8.0 / 27.0 * e3,
            8.0 / 27.0 * e3,
        ],
        r => {
            return Err(Error::InvalidState(format!(
                "purification round {r} not in 0..=3"
            )))
        }
    };
    if let Some(&weight) = w.iter().find(|&&x| x < 0.0) {
        return Err(Error::NegativeWeight {
            epsilon,
            round,
            weight,
        });
    }
    Ok(w)
}

/// Raw weights renormalized to sum to one.
pub fn ion_trap_weights(epsilon: f64, round: u8) -> Result<[f64; 4]> {
    let w = ion_trap_weights_raw(epsilon, round)?;
    let s: f64 = w.iter().sum();
    Ok(w.map(|x| x / s))
}

/// Ion-trap state with infidelity `epsilon` after `round` purification rounds.
pub fn ion_trap_state(epsilon: f64, round: u8) -> Result<TwoQubitState> {
    bell_diagonal(
        ion_trap_weights(epsilon, round)?,
        StateLabel::IonTrap {
            epsilon,
            purification_round: round,
        },
    )
}

pub fn bell_state(b: BellState) -> TwoQubitState {
    TwoQubitState::new(b.density(), StateLabel::Custom).expect("Bell states are valid")
}

/// Uhlmann fidelity `tr sqrt(sqrt(ρ) τ sqrt(ρ))`.
pub fn fidelity(state: &TwoQubitState, target: &TwoQubitState) -> Result<f64> {
    matrix_fidelity(state.rho(), target.rho())
}

pub fn matrix_fidelity(rho: &ComplexMatrix, tau: &ComplexMatrix) -> Result<f64> {
    let s = rho.sqrt_psd(SQRT_CLIP)?;
    if tau.min_eigenvalue()? < -SQRT_CLIP {
        return Err(Error::NotPsd {
            min_eigenvalue: tau.min_eigenvalue()?,
        });
    }
    let inner = (&(&s * tau) * &s).hermitian_part();
    let root = inner.sqrt_psd(SQRT_CLIP)?;
    Ok(root.trace_re().clamp(0.0, 1.0))
}
