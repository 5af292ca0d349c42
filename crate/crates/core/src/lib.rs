//! Randomness certification for sequences of non-projective qubit
//! measurements in the one-sided device-independent (steering) scenario.
//!
//! Alice and Bob share a two-qubit state. Bob applies a sequence of noisy
//! X/Z measurements ([`measurement`]); Alice's conditional states form an
//! assemblage per round. Steering inequalities are extracted by
//! semidefinite programming and an adversary's guessing probability for
//! Bob's outcome string is bounded by a further SDP ([`sdp`]).
//! [`circuit`] re-derives the assemblages from an explicit ancilla circuit,
//! and [`experiment`] runs parameter sweeps and writes CSV/JSON tables.

pub mod bits;
pub mod circuit;
pub mod error;
pub mod experiment;
pub mod lhs;
pub mod linalg;
pub mod measurement;
pub mod sdp;
pub mod states;

pub use bits::BitString;
pub use error::{Error, Result};
pub use linalg::{ComplexMatrix, Subsystem};
pub use measurement::{Assemblage, MeasurementSchedule};
pub use sdp::{certify, CertificationReport, CertifyOptions, SolveStatus};
pub use states::{ion_trap_state, pure_state, TwoQubitState};
