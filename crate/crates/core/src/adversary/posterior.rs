//! Exact Bayesian posterior over hypotheses about hidden choices, given
//! everything an observer saw.
//!
//! A hypothesis fixes every non-identity gate applied in the run, plus any
//! latent bits the observer might learn (`k`, the announced verdict). The
//! likelihood of the observed X-basis outcomes on each readout register is
//! computed on the dense backend, independently of the engine the run used,
//! and marginalised over the outcomes the observer did not see.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use rand::Rng;

use super::AdversaryError;
use crate::ghz::{create_ghz, Backend, DiagonalGate, RegisterId, SimRng};
use crate::netsim::{AppliedGate, EventKind, Message, Observer, PartyId, PartyView, Transcript};

type GateKey = (PartyId, RegisterId, i64);

fn gate_code(gate: DiagonalGate) -> Option<i64> {
    match gate {
        DiagonalGate::Identity => None,
        DiagonalGate::PauliZ => Some(-1),
        DiagonalGate::PhaseG { g } => Some(i64::from(g)),
    }
}

fn applied_code(gate: AppliedGate) -> Option<i64> {
    match gate {
        AppliedGate::PauliZ => Some(-1),
        AppliedGate::PhaseG { g } => Some(i64::from(g)),
        AppliedGate::Identity | AppliedGate::Hadamard => None,
    }
}

/// What an observer knows after a run.
#[derive(Clone, Debug, Default)]
pub struct Evidence {
    agents: usize,
    bits: BTreeMap<RegisterId, BTreeMap<usize, u8>>,
    gates: BTreeSet<GateKey>,
    gate_watch: BTreeSet<PartyId>,
    verdict: Option<Vec<bool>>,
    k: Option<Vec<u8>>,
}

impl Evidence {
    /// Collects outcomes, gate choices and the verdict from a view. Every
    /// announced bit is taken to be the sender's own outcome on its qubit.
    pub fn from_view(view: &PartyView, agents: usize) -> Self {
        let gate_watch = match &view.observer {
            Observer::Party(p) => BTreeSet::from([*p]),
            Observer::Coalition(m) => m.clone(),
            Observer::Eavesdropper => BTreeSet::new(),
        };
        let mut ev = Evidence {
            agents,
            gate_watch,
            ..Evidence::default()
        };
        for e in view.events() {
            match &e.kind {
                EventKind::Measurement {
                    register,
                    qubit,
                    bit,
                    ..
                } => {
                    ev.bits.entry(*register).or_default().insert(*qubit, *bit);
                }
                EventKind::MessageSent {
                    message:
                        Message::BroadcastBit {
                            sender,
                            register,
                            bit,
                        }
                        | Message::DirectedBit {
                            sender,
                            register,
                            bit,
                            ..
                        },
                } => {
                    ev.bits
                        .entry(*register)
                        .or_default()
                        .insert(sender.qubit_on(agents), *bit);
                }
                EventKind::MessageSent {
                    message: Message::VerdictAnnounce { verdict, .. },
                } => ev.verdict = Some(verdict.per_bit.clone()),
                EventKind::GateApplied {
                    party,
                    register,
                    gate,
                    ..
                } => {
                    if let Some(c) = applied_code(*gate) {
                        ev.gates.insert((*party, *register, c));
                    }
                }
                _ => {}
            }
        }
        ev
    }

    /// Ablation: the observer also sees every party's gate choices.
    pub fn reveal_all_gates(mut self, transcript: &Transcript, parties: &[PartyId]) -> Self {
        for e in transcript.events() {
            if let EventKind::GateApplied {
                party,
                register,
                gate,
                ..
            } = e.kind
            {
                if let Some(c) = applied_code(gate) {
                    self.gates.insert((party, register, c));
                }
            }
        }
        self.gate_watch.extend(parties.iter().copied());
        self
    }

    /// Ablation: the observer learns the masking bits.
    pub fn reveal_k(mut self, k: Vec<u8>) -> Self {
        self.k = Some(k);
        self
    }

    pub fn observed_bits(&self, register: RegisterId) -> Option<&BTreeMap<usize, u8>> {
        self.bits.get(&register)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Hypothesis<L> {
    pub label: L,
    pub prior: f64,
    pub gates: Vec<(PartyId, RegisterId, DiagonalGate)>,
    pub verdict: Option<Vec<bool>>,
    pub k: Option<Vec<u8>>,
}

impl<L> Hypothesis<L> {
    pub fn new(label: L, prior: f64) -> Self {
        Hypothesis {
            label,
            prior,
            gates: Vec::new(),
            verdict: None,
            k: None,
        }
    }
}

type CircuitKey = (usize, Vec<(usize, DiagonalGate)>);

/// Memoised dense-backend outcome distributions.
#[derive(Default)]
pub struct LikelihoodOracle {
    cache: HashMap<CircuitKey, Vec<f64>>,
}

impl LikelihoodOracle {
    fn distribution(
        &mut self,
        arity: usize,
        mut gates: Vec<(usize, DiagonalGate)>,
    ) -> Result<&Vec<f64>, AdversaryError> {
        gates.sort_by_key(|(q, g)| (*q, gate_code(*g)));
        let key = (arity, gates);
        if !self.cache.contains_key(&key) {
            let mut reg = create_ghz(0, arity, Backend::Dense)?;
            for &(q, g) in &key.1 {
                reg.apply_diagonal(q, g)?;
            }
            let dist = reg.hadamard_outcome_distribution()?;
            self.cache.insert(key.clone(), dist);
        }
        Ok(&self.cache[&key])
    }

    /// Probability of the observed subset of X-basis outcomes.
    pub fn likelihood(
        &mut self,
        arity: usize,
        gates: Vec<(usize, DiagonalGate)>,
        observed: Option<&BTreeMap<usize, u8>>,
    ) -> Result<f64, AdversaryError> {
        let dist = self.distribution(arity, gates)?;
        let Some(observed) = observed else {
            return Ok(1.0);
        };
        let (mut mask, mut want) = (0usize, 0usize);
        for (&q, &b) in observed {
            if q == 0 || q > arity {
                return Err(AdversaryError::Inconsistent(format!(
                    "observed qubit {q} on an arity-{arity} register"
                )));
            }
            let bit = 1 << (arity - q);
            mask |= bit;
            if b == 1 {
                want |= bit;
            }
        }
        Ok(dist
            .iter()
            .enumerate()
            .filter(|(i, _)| i & mask == want)
            .map(|(_, p)| p)
            .sum())
    }
}

/// Normalised posterior over labels. `readout` lists the X-measured
/// registers and their arities.
pub fn posterior<L: Ord + Clone>(
    evidence: &Evidence,
    readout: &BTreeMap<RegisterId, usize>,
    hypotheses: &[Hypothesis<L>],
    oracle: &mut LikelihoodOracle,
) -> Result<BTreeMap<L, f64>, AdversaryError> {
    let mut weights: BTreeMap<L, f64> = BTreeMap::new();
    for h in hypotheses {
        let entry = weights.entry(h.label.clone()).or_insert(0.0);
        if h.prior == 0.0 || !consistent(evidence, h) {
            continue;
        }
        let mut like = h.prior;
        for (&reg, &arity) in readout {
            let gates: Vec<(usize, DiagonalGate)> = h
                .gates
                .iter()
                .filter(|(_, r, g)| *r == reg && gate_code(*g).is_some())
                .map(|(p, _, g)| (p.qubit_on(evidence.agents), *g))
                .collect();
            like *= oracle.likelihood(arity, gates, evidence.observed_bits(reg))?;
        }
        *entry += like;
    }
    let total: f64 = weights.values().sum();
    if total <= 0.0 {
        return Err(AdversaryError::Inconsistent(
            "no hypothesis explains the observed view".into(),
        ));
    }
    weights.values_mut().for_each(|w| *w /= total);
    Ok(weights)
}

fn consistent<L>(evidence: &Evidence, h: &Hypothesis<L>) -> bool {
    let predicted: BTreeSet<GateKey> = h
        .gates
        .iter()
        .filter(|(p, _, _)| evidence.gate_watch.contains(p))
        .filter_map(|(p, r, g)| gate_code(*g).map(|c| (*p, *r, c)))
        .collect();
    let seen: BTreeSet<GateKey> = evidence
        .gates
        .iter()
        .filter(|(p, _, _)| evidence.gate_watch.contains(p))
        .copied()
        .collect();
    if predicted != seen {
        return false;
    }
    if let (Some(a), Some(b)) = (&evidence.verdict, &h.verdict) {
        if a != b {
            return false;
        }
    }
    if let (Some(a), Some(b)) = (&evidence.k, &h.k) {
        if a != b {
            return false;
        }
    }
    true
}

/// Maximum a posteriori label; exact ties are broken uniformly at random.
pub fn map_guess<L: Clone>(posterior: &BTreeMap<L, f64>, rng: &mut SimRng) -> Option<L> {
    let best = posterior
        .values()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    let top: Vec<&L> = posterior
        .iter()
        .filter(|(_, p)| best - **p <= 1e-12)
        .map(|(l, _)| l)
        .collect();
    if top.is_empty() {
        return None;
    }
    Some(top[rng.random_range(0..top.len())].clone())
}

/// Largest distance between the posterior and the uniform distribution.
pub fn uniform_deviation<L>(posterior: &BTreeMap<L, f64>) -> f64 {
    let u = 1.0 / posterior.len() as f64;
    posterior
        .values()
        .map(|p| (p - u).abs())
        .fold(0.0, f64::max)
}
