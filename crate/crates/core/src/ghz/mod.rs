//! GHZ-state engine.
//!
//! Two interchangeable backends simulate exactly the operations the
//! protocols need. The phase backend tracks a GHZ register as
//! `(|0…0⟩ + e^{iθ}|1…1⟩)/√2` with `θ` kept as an exact dyadic angle, which
//! is closed under diagonal gates and Hadamard-then-measure. The dense backend
//! keeps the full statevector and additionally supports arbitrary
//! single-qubit unitaries, CNOTs and ancillas for tampering experiments.

mod angle;
pub mod dense;
mod register;

pub use angle::Angle;
pub use dense::{Matrix2, StateVector};
pub use register::{GhzRegister, RegisterId, RegisterState};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Generator type threaded through every stochastic operation.
pub type SimRng = rand_chacha::ChaCha8Rng;

/// Dense statevectors are capped at this many qubits (ancillas included).
pub const DENSE_QUBIT_CAP: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    #[default]
    Phase,
    Dense,
}

impl std::fmt::Display for Backend {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Backend::Phase => "phase",
            Backend::Dense => "dense",
        })
    }
}

impl std::str::FromStr for Backend {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "phase" => Ok(Backend::Phase),
            "dense" => Ok(Backend::Dense),
            other => Err(format!("unknown backend `{other}` (expected phase|dense)")),
        }
    }
}

/// The diagonal gate set used by honest parties.
///
/// `PhaseG { g }` is `cos(φ/2)·I + i·sin(φ/2)·Z = diag(e^{iφ/2}, e^{-iφ/2})`
/// with `φ = π/2^g`; it lowers the relative phase of a GHZ register by `φ`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "gate")]
pub enum DiagonalGate {
    Identity,
    PauliZ,
    PhaseG { g: u32 },
}

impl DiagonalGate {
    /// Change of the relative phase `θ` caused by this gate.
    pub fn relative_shift(self) -> Result<Angle, EngineError> {
        match self {
            DiagonalGate::Identity => Ok(Angle::ZERO),
            DiagonalGate::PauliZ => Ok(Angle::PI),
            DiagonalGate::PhaseG { g } => Angle::pi_over_pow2(g)
                .map(|phi| -phi)
                .ok_or(EngineError::PhaseResolution(g)),
        }
    }

    pub fn matrix(self) -> Matrix2 {
        let zero = Complex64::new(0.0, 0.0);
        let (a, b) = match self {
            DiagonalGate::Identity => (Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0)),
            DiagonalGate::PauliZ => (Complex64::new(1.0, 0.0), Complex64::new(-1.0, 0.0)),
            DiagonalGate::PhaseG { g } => {
                let phi = std::f64::consts::PI / 2f64.powi(g as i32);
                (
                    Complex64::from_polar(1.0, phi / 2.0),
                    Complex64::from_polar(1.0, -phi / 2.0),
                )
            }
        };
        [[a, zero], [zero, b]]
    }
}

/// Exact parity statistics of a Hadamard-all-then-measure readout.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParityDistribution {
    pub p_even: f64,
    pub p_odd: f64,
}

impl ParityDistribution {
    pub fn from_even(p_even: f64) -> Self {
        ParityDistribution {
            p_even,
            p_odd: 1.0 - p_even,
        }
    }

    pub fn max_abs_diff(&self, other: &ParityDistribution) -> f64 {
        (self.p_even - other.p_even)
            .abs()
            .max((self.p_odd - other.p_odd).abs())
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EngineError {
    #[error("GHZ arity must be at least 2, got {0}")]
    InvalidArity(usize),
    #[error("dense backend holds at most {cap} qubits, requested {requested}")]
    ArityCap { requested: usize, cap: usize },
    #[error("qubit index {index} out of range 1..={qubits}")]
    QubitOutOfRange { index: usize, qubits: usize },
    #[error("qubit {qubit} of register {register} was already measured")]
    QubitConsumed { register: RegisterId, qubit: usize },
    #[error("register {0} has been consumed by a terminal measurement")]
    RegisterConsumed(RegisterId),
    #[error("register {0} is partially measured")]
    PartiallyMeasured(RegisterId),
    #[error("unsupported operation on the phase backend: {0}")]
    UnsupportedGate(String),
    #[error("matrix is not unitary (defect {0:e})")]
    NotUnitary(f64),
    #[error("phase pi/2^{0} is below the representable resolution")]
    PhaseResolution(u32),
}

/// `create_ghz` as a free function.
pub fn create_ghz(
    id: RegisterId,
    arity: usize,
    backend: Backend,
) -> Result<GhzRegister, EngineError> {
    GhzRegister::new(id, arity, backend)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn phase_g_zero_matches_pauli_z_shift() {
        assert_eq!(
            DiagonalGate::PhaseG { g: 0 }.relative_shift().unwrap(),
            DiagonalGate::PauliZ.relative_shift().unwrap()
        );
    }

    #[test]
    fn phase_g_matrix_ratio_is_minus_phi() {
        for g in 0..6 {
            let m = DiagonalGate::PhaseG { g }.matrix();
            let ratio = m[1][1] / m[0][0];
            let expected = DiagonalGate::PhaseG { g }
                .relative_shift()
                .unwrap()
                .radians();
            let got = Angle::from_radians(ratio.arg()).radians();
            assert!((got - expected).abs() < 1e-12, "g={g}");
        }
    }

    #[test]
    fn backend_parses() {
        assert_eq!("dense".parse::<Backend>(), Ok(Backend::Dense));
        assert!("stabilizer".parse::<Backend>().is_err());
    }
}
