use rand::Rng;

use super::dense::{self, Matrix2, StateVector};
use super::{
    Angle, Backend, DiagonalGate, EngineError, ParityDistribution, SimRng, DENSE_QUBIT_CAP,
};

pub type RegisterId = u64;

#[derive(Clone, Debug, PartialEq)]
pub enum RegisterState {
    /// `(|0…0⟩ + e^{iθ}|1…1⟩)/√2` over the still-unmeasured qubits.
    Phase(Angle),
    /// `|b…b⟩` over the still-unmeasured qubits.
    Collapsed(u8),
    Dense(StateVector),
}

/// One shared multipartite GHZ resource.
///
/// Qubit indices are 1-based: qubit `i` is the particle handed to party `i`,
/// and on registers shared with a third party, qubit `arity` is the TP's.
/// Ancillas attached by a dense-backend adversary are numbered after the
/// party qubits.
///
/// Each qubit is measured at most once. The register is consumed when every
/// party qubit has been measured.
#[derive(Clone, Debug)]
pub struct GhzRegister {
    id: RegisterId,
    arity: usize,
    state: RegisterState,
    outcomes: Vec<Option<u8>>,
    // Phase backend only: Hadamard applied and not yet followed by a measurement.
    hadamard: Vec<bool>,
}

impl GhzRegister {
    pub fn new(id: RegisterId, arity: usize, backend: Backend) -> Result<Self, EngineError> {
        Self::check_arity(arity, backend)?;
        let state = match backend {
            Backend::Phase => RegisterState::Phase(Angle::ZERO),
            Backend::Dense => RegisterState::Dense(StateVector::ghz(arity)),
        };
        Ok(Self::with_state(id, arity, state))
    }

    /// A product state `|b…b⟩` posing as a GHZ register (dishonest preparer).
    pub fn product(
        id: RegisterId,
        arity: usize,
        bit: u8,
        backend: Backend,
    ) -> Result<Self, EngineError> {
        Self::check_arity(arity, backend)?;
        let state = match backend {
            Backend::Phase => RegisterState::Collapsed(bit & 1),
            Backend::Dense => RegisterState::Dense(StateVector::uniform_basis(arity, bit & 1)),
        };
        Ok(Self::with_state(id, arity, state))
    }

    fn check_arity(arity: usize, backend: Backend) -> Result<(), EngineError> {
        if arity < 2 {
            return Err(EngineError::InvalidArity(arity));
        }
        if backend == Backend::Dense && arity > DENSE_QUBIT_CAP {
            return Err(EngineError::ArityCap {
                requested: arity,
                cap: DENSE_QUBIT_CAP,
            });
        }
        Ok(())
    }

    fn with_state(id: RegisterId, arity: usize, state: RegisterState) -> Self {
        GhzRegister {
            id,
            arity,
            state,
            outcomes: vec![None; arity],
            hadamard: vec![false; arity],
        }
    }

    pub fn id(&self) -> RegisterId {
        self.id
    }

    /// Number of party qubits.
    pub fn arity(&self) -> usize {
        self.arity
    }

    /// Party qubits plus attached ancillas.
    pub fn qubits(&self) -> usize {
        self.outcomes.len()
    }

    pub fn state(&self) -> &RegisterState {
        &self.state
    }

    pub fn backend(&self) -> Backend {
        match self.state {
            RegisterState::Dense(_) => Backend::Dense,
            _ => Backend::Phase,
        }
    }

    /// Relative phase, when the register is a coherent phase-backend GHZ.
    pub fn phase(&self) -> Option<Angle> {
        match self.state {
            RegisterState::Phase(theta) => Some(theta),
            _ => None,
        }
    }

    pub fn outcome(&self, qubit: usize) -> Option<u8> {
        self.outcomes.get(qubit.wrapping_sub(1)).copied().flatten()
    }

    pub fn is_consumed(&self) -> bool {
        self.outcomes[..self.arity].iter().all(Option::is_some)
    }

    fn any_party_measured(&self) -> bool {
        self.outcomes[..self.arity].iter().any(Option::is_some)
    }

    /// Validates a 1-based index against a live qubit and returns it 0-based.
    fn live_qubit(&self, qubit: usize) -> Result<usize, EngineError> {
        if qubit <= self.arity && self.is_consumed() {
            return Err(EngineError::RegisterConsumed(self.id));
        }
        if qubit == 0 || qubit > self.qubits() {
            return Err(EngineError::QubitOutOfRange {
                index: qubit,
                qubits: self.qubits(),
            });
        }
        if self.outcomes[qubit - 1].is_some() {
            return Err(EngineError::QubitConsumed {
                register: self.id,
                qubit,
            });
        }
        Ok(qubit - 1)
    }

    pub fn apply_diagonal(&mut self, qubit: usize, gate: DiagonalGate) -> Result<(), EngineError> {
        let q = self.live_qubit(qubit)?;
        let shift = gate.relative_shift()?;
        match &mut self.state {
            RegisterState::Phase(theta) => {
                if self.hadamard[q] {
                    return Err(EngineError::UnsupportedGate(format!(
                        "{gate:?} after Hadamard on qubit {qubit}"
                    )));
                }
                *theta = *theta + shift;
            }
            // |b…b⟩ only picks up a global phase
            RegisterState::Collapsed(_) => {}
            RegisterState::Dense(sv) => sv.apply_1q(q, &gate.matrix()),
        }
        Ok(())
    }

    pub fn apply_hadamard(&mut self, qubit: usize) -> Result<(), EngineError> {
        let q = self.live_qubit(qubit)?;
        match &mut self.state {
            RegisterState::Dense(sv) => sv.apply_1q(q, &dense::hadamard_matrix()),
            _ => self.hadamard[q] = !self.hadamard[q],
        }
        Ok(())
    }

    /// Applies an arbitrary single-qubit unitary.
    ///
    /// The phase backend accepts only diagonal matrices, which it folds into
    /// the relative phase.
    pub fn apply_unitary_1q(&mut self, qubit: usize, matrix: &Matrix2) -> Result<(), EngineError> {
        let q = self.live_qubit(qubit)?;
        let defect = dense::unitarity_defect(matrix);
        if defect > 1e-9 {
            return Err(EngineError::NotUnitary(defect));
        }
        match &mut self.state {
            RegisterState::Dense(sv) => sv.apply_1q(q, matrix),
            _ if !dense::is_diagonal(matrix) => {
                return Err(EngineError::UnsupportedGate(
                    "non-diagonal single-qubit unitary".into(),
                ))
            }
            RegisterState::Phase(theta) => {
                if self.hadamard[q] {
                    return Err(EngineError::UnsupportedGate(format!(
                        "diagonal unitary after Hadamard on qubit {qubit}"
                    )));
                }
                let ratio = matrix[1][1] / matrix[0][0];
                *theta = *theta + Angle::from_radians(ratio.arg());
            }
            RegisterState::Collapsed(_) => {}
        }
        Ok(())
    }

    /// Attaches a fresh `|0⟩` ancilla and returns its 1-based index.
    pub fn attach_ancilla(&mut self) -> Result<usize, EngineError> {
        if self.is_consumed() {
            return Err(EngineError::RegisterConsumed(self.id));
        }
        let RegisterState::Dense(sv) = &mut self.state else {
            return Err(EngineError::UnsupportedGate("ancilla qubits".into()));
        };
        if sv.qubits() + 1 > DENSE_QUBIT_CAP {
            return Err(EngineError::ArityCap {
                requested: sv.qubits() + 1,
                cap: DENSE_QUBIT_CAP,
            });
        }
        sv.push_zero_qubit();
        self.outcomes.push(None);
        self.hadamard.push(false);
        Ok(self.qubits())
    }

    pub fn apply_cnot(&mut self, control: usize, target: usize) -> Result<(), EngineError> {
        let c = self.live_qubit(control)?;
        let t = self.live_qubit(target)?;
        if c == t {
            return Err(EngineError::UnsupportedGate(
                "CNOT with control == target".into(),
            ));
        }
        let RegisterState::Dense(sv) = &mut self.state else {
            return Err(EngineError::UnsupportedGate("two-qubit gates".into()));
        };
        sv.apply_cnot(c, t);
        Ok(())
    }

    /// Computational-basis measurement of one qubit (after any Hadamard
    /// already applied to it).
    pub fn measure_computational(
        &mut self,
        qubit: usize,
        rng: &mut SimRng,
    ) -> Result<u8, EngineError> {
        let q = self.live_qubit(qubit)?;
        let bit = match &mut self.state {
            RegisterState::Dense(sv) => sv.measure(q, rng),
            RegisterState::Collapsed(b) => {
                if self.hadamard[q] {
                    u8::from(rng.random::<bool>())
                } else {
                    *b
                }
            }
            RegisterState::Phase(theta) => {
                if self.hadamard[q] {
                    let remaining = self.outcomes[..self.arity]
                        .iter()
                        .filter(|o| o.is_none())
                        .count();
                    if remaining >= 2 {
                        // X outcome on one GHZ qubit is uniform; the rest stays
                        // a GHZ whose phase absorbs the outcome.
                        let x = u8::from(rng.random::<bool>());
                        *theta = *theta + Angle::pi_multiple(i64::from(x));
                        x
                    } else {
                        let p0 = theta.cos_sq_half();
                        u8::from(rng.random::<f64>() >= p0)
                    }
                } else {
                    let b = u8::from(rng.random::<bool>());
                    self.state = RegisterState::Collapsed(b);
                    b
                }
            }
        };
        self.outcomes[q] = Some(bit);
        self.hadamard[q] = false;
        Ok(bit)
    }

    /// Measures a qubit in transit and leaves the collapsed particle in place
    /// for its owner. Unlike [`measure_computational`](Self::measure_computational)
    /// no outcome is recorded. Dense backend only.
    pub fn intercept_measure(&mut self, qubit: usize, rng: &mut SimRng) -> Result<u8, EngineError> {
        let q = self.live_qubit(qubit)?;
        let RegisterState::Dense(sv) = &mut self.state else {
            return Err(EngineError::UnsupportedGate("intercept measurement".into()));
        };
        Ok(sv.measure(q, rng))
    }

    /// Applies `H` to every party qubit and measures them all; terminal.
    pub fn hadamard_all_then_measure(&mut self, rng: &mut SimRng) -> Result<Vec<u8>, EngineError> {
        if self.is_consumed() {
            return Err(EngineError::RegisterConsumed(self.id));
        }
        if self.any_party_measured() {
            return Err(EngineError::PartiallyMeasured(self.id));
        }
        for q in 1..=self.arity {
            self.apply_hadamard(q)?;
        }
        (1..=self.arity)
            .map(|q| self.measure_computational(q, rng))
            .collect()
    }

    /// Exact parity statistics of a Hadamard-all readout, without consuming.
    pub fn exact_parity_distribution(&self) -> Result<ParityDistribution, EngineError> {
        match &self.state {
            RegisterState::Collapsed(_) => Ok(ParityDistribution::from_even(0.5)),
            RegisterState::Phase(theta) => {
                self.require_fresh()?;
                Ok(ParityDistribution::from_even(theta.cos_sq_half()))
            }
            RegisterState::Dense(_) => {
                let dist = self.hadamard_outcome_distribution()?;
                let p_even = dist
                    .iter()
                    .enumerate()
                    .filter(|(s, _)| s.count_ones() % 2 == 0)
                    .map(|(_, p)| p)
                    .sum();
                Ok(ParityDistribution {
                    p_even,
                    p_odd: dist.iter().sum::<f64>() - p_even,
                })
            }
        }
    }

    /// Exact joint distribution of the party-qubit bitstring produced by
    /// Hadamard-all-then-measure. Index is big-endian in qubit order.
    pub fn hadamard_outcome_distribution(&self) -> Result<Vec<f64>, EngineError> {
        self.require_fresh()?;
        let size = 1usize << self.arity;
        match &self.state {
            RegisterState::Collapsed(_) => Ok(vec![1.0 / size as f64; size]),
            RegisterState::Phase(theta) => {
                let c = theta.radians().cos();
                Ok((0..size)
                    .map(|s| {
                        let sign = if s.count_ones() % 2 == 0 { 1.0 } else { -1.0 };
                        (1.0 + sign * c) / size as f64
                    })
                    .collect())
            }
            RegisterState::Dense(sv) => {
                let mut sv = sv.clone();
                for q in 0..self.arity {
                    sv.apply_1q(q, &dense::hadamard_matrix());
                }
                Ok(sv.leading_distribution(self.arity))
            }
        }
    }

    fn require_fresh(&self) -> Result<(), EngineError> {
        if self.any_party_measured() {
            return Err(EngineError::PartiallyMeasured(self.id));
        }
        if self.hadamard.iter().any(|h| *h) {
            return Err(EngineError::UnsupportedGate(
                "distribution query with pending Hadamards".into(),
            ));
        }
        Ok(())
    }

    /// Nonzero dense amplitudes as `(index, re, im)`; `None` on the phase backend.
    pub fn export_amplitudes(&self) -> Option<Vec<(usize, f64, f64)>> {
        match &self.state {
            RegisterState::Dense(sv) => Some(sv.export()),
            _ => None,
        }
    }

    pub fn dense_norm(&self) -> Option<f64> {
        match &self.state {
            RegisterState::Dense(sv) => Some(sv.norm_sqr()),
            _ => None,
        }
    }
}
