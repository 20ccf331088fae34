//! Anonymous private comparison, two-party and multi-party.
//!
//! Both schemes share one encoding. Each message bit owns an arity-`n`
//! register `F` and a list of arity-`n+1` slots `(register, branch, gate)`.
//! The competitors measure `F` in the computational basis and obtain a
//! common random bit `k`. On a slot of branch `β` a competitor with secret
//! bit `b` applies the slot gate iff `b ⊕ β ⊕ k = 1`, and Identity
//! otherwise. Everyone holding a slot qubit then measures it in the X basis
//! and reports to the third party, which XORs the `n + 1` bits into `D`.
//!
//! The two-party scheme has a single branch-0 slot with Pauli Z; the bit is
//! equal iff `D = 0`. The multi-party scheme has slots for both branches and
//! every `g ∈ 0..=G`, `G = ⌈log2 n⌉`, with gate `PhaseG(g)`; the bit is equal
//! iff some branch has `D = 0` for every `g`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{ProtocolConfig, ProtocolError};
use crate::ghz::{DiagonalGate, RegisterId};
use crate::netsim::{
    AnnouncedVerdict, Ctx, Endpoint, NetError, Network, PartyId, PartyMachine, Transcript,
};
use crate::seed::{stream_rng, Role, StageStream};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    TwoParty,
    Multi,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Slot {
    pub register: RegisterId,
    pub branch: u8,
    pub g: u32,
    pub gate: DiagonalGate,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BitLayout {
    pub f: RegisterId,
    pub slots: Vec<Slot>,
}

/// `D` for one slot as computed by the third party.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlotParity {
    pub branch: u8,
    pub g: u32,
    pub d: u8,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BitVerdict {
    Equal,
    NotEqual,
}

impl BitVerdict {
    pub fn from_bool(equal: bool) -> Self {
        if equal {
            BitVerdict::Equal
        } else {
            BitVerdict::NotEqual
        }
    }

    pub fn is_equal(self) -> bool {
        self == BitVerdict::Equal
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub per_bit: Vec<BitVerdict>,
    pub overall: BitVerdict,
    pub announced_by: PartyId,
}

impl Verdict {
    fn from_bits(per_bit: Vec<BitVerdict>, announced_by: PartyId) -> Self {
        let overall = BitVerdict::from_bool(per_bit.iter().all(|b| b.is_equal()));
        Verdict {
            per_bit,
            overall,
            announced_by,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ComparisonOutcome {
    pub verdict: Verdict,
    /// Shared random bit `k` per message bit, as measured on `F`.
    pub k: Vec<u8>,
    pub parities: Vec<Vec<SlotParity>>,
    pub layouts: Vec<BitLayout>,
}

#[derive(Clone, Debug)]
pub struct ComparisonReport {
    pub outcome: ComparisonOutcome,
    pub scheme: Scheme,
    pub transcript: Transcript,
}

/// `⌈log2 n⌉` for `n ≥ 1`.
pub fn ceil_log2(n: usize) -> u32 {
    assert!(n >= 1, "ceil_log2 of 0");
    usize::BITS - (n - 1).leading_zeros()
}

/// Arity-`(n+1)` registers spent per message bit by the multi-party scheme.
pub fn multi_registers_per_bit(n: usize) -> usize {
    2 * (ceil_log2(n) as usize + 1)
}

/// Slot registers needed per message bit.
pub fn slots_per_bit(scheme: Scheme, n: usize) -> usize {
    match scheme {
        Scheme::TwoParty => 1,
        Scheme::Multi => multi_registers_per_bit(n),
    }
}

/// Decision rule: some branch has `D = 0` on every one of its slots.
pub fn bit_equal(parities: &[SlotParity]) -> bool {
    [0u8, 1].iter().any(|&branch| {
        let mut row = parities.iter().filter(|p| p.branch == branch).peekable();
        row.peek().is_some() && row.all(|p| p.d == 0)
    })
}

impl BitLayout {
    /// Splits resource pools into per-bit layouts: `f` holds one arity-`n`
    /// register per bit, `q` holds `slots_per_bit` arity-`(n+1)` registers per
    /// bit, ordered branch-major then by `g`.
    pub fn from_pools(
        scheme: Scheme,
        agents: usize,
        f: &[RegisterId],
        q: &[RegisterId],
    ) -> Result<Vec<BitLayout>, ProtocolError> {
        let per_bit = slots_per_bit(scheme, agents);
        if q.len() != per_bit * f.len() {
            return Err(ProtocolError::Config(format!(
                "{} message bits need {} slot registers, got {}",
                f.len(),
                per_bit * f.len(),
                q.len()
            )));
        }
        let levels = ceil_log2(agents) + 1;
        Ok(f.iter()
            .zip(q.chunks(per_bit))
            .map(|(&f, regs)| {
                let slots = regs
                    .iter()
                    .enumerate()
                    .map(|(i, &register)| match scheme {
                        Scheme::TwoParty => Slot {
                            register,
                            branch: 0,
                            g: 0,
                            gate: DiagonalGate::PauliZ,
                        },
                        Scheme::Multi => {
                            let g = i as u32 % levels;
                            Slot {
                                register,
                                branch: (i as u32 / levels) as u8,
                                g,
                                gate: DiagonalGate::PhaseG { g },
                            }
                        }
                    })
                    .collect();
                BitLayout { f, slots }
            })
            .collect())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum CompareStep {
    MeasureF,
    Encode,
    MeasureQ,
    Report,
    Decide,
}

const COMPARE_SCHEDULE: [CompareStep; 5] = [
    CompareStep::MeasureF,
    CompareStep::Encode,
    CompareStep::MeasureQ,
    CompareStep::Report,
    CompareStep::Decide,
];

struct SlotHolder {
    id: PartyId,
    /// Secret bits for a competitor, `None` for everyone else.
    secret: Option<Vec<u8>>,
    layouts: Vec<BitLayout>,
    k: Vec<u8>,
    parities: Vec<Vec<SlotParity>>,
    verdict: Option<Verdict>,
}

impl SlotHolder {
    fn slot_registers(&self) -> impl Iterator<Item = RegisterId> + '_ {
        self.layouts
            .iter()
            .flat_map(|l| l.slots.iter().map(|s| s.register))
    }

    fn decide(&mut self, ctx: &mut Ctx<'_>) -> Result<(), NetError> {
        let agents = ctx.agents();
        let mut per_bit = Vec::with_capacity(self.layouts.len());
        for layout in &self.layouts {
            let mut row = Vec::with_capacity(layout.slots.len());
            for slot in &layout.slots {
                let bits = ctx.visible_bits(slot.register);
                if bits.len() != agents {
                    return Err(NetError::PartyFailed {
                        party: self.id,
                        round: ctx.round(),
                        message: format!(
                            "register {} has {} of {agents} reports",
                            slot.register,
                            bits.len()
                        ),
                    });
                }
                let own = ctx.my_outcome(slot.register).ok_or(NetError::NoOutcome {
                    party: self.id,
                    register: slot.register,
                })?;
                let d = bits.iter().fold(own, |acc, (_, b)| acc ^ b);
                row.push(SlotParity {
                    branch: slot.branch,
                    g: slot.g,
                    d,
                });
            }
            per_bit.push(BitVerdict::from_bool(bit_equal(&row)));
            self.parities.push(row);
        }
        let verdict = Verdict::from_bits(per_bit, self.id);
        ctx.announce_verdict(AnnouncedVerdict {
            equal: verdict.overall.is_equal(),
            per_bit: verdict.per_bit.iter().map(|b| b.is_equal()).collect(),
        });
        self.verdict = Some(verdict);
        Ok(())
    }
}

impl PartyMachine<CompareStep> for SlotHolder {
    fn id(&self) -> PartyId {
        self.id
    }

    fn step(&mut self, step: &CompareStep, ctx: &mut Ctx<'_>) -> Result<(), NetError> {
        match step {
            CompareStep::MeasureF => {
                if self.secret.is_some() {
                    for l in &self.layouts {
                        let k = ctx.measure(l.f)?;
                        self.k.push(k);
                    }
                }
            }
            CompareStep::Encode => {
                if let Some(secret) = &self.secret {
                    for ((l, &b), &k) in self.layouts.iter().zip(secret).zip(&self.k) {
                        for s in &l.slots {
                            let gate = if b ^ s.branch ^ k == 1 {
                                s.gate
                            } else {
                                DiagonalGate::Identity
                            };
                            ctx.apply_gate(s.register, gate)?;
                        }
                    }
                }
            }
            CompareStep::MeasureQ => {
                let regs: Vec<_> = self.slot_registers().collect();
                for r in regs {
                    ctx.apply_hadamard(r)?;
                    ctx.measure(r)?;
                }
            }
            CompareStep::Report => {
                if self.id != PartyId::ThirdParty {
                    let regs: Vec<_> = self.slot_registers().collect();
                    for r in regs {
                        let bit = ctx.my_outcome(r).ok_or(NetError::NoOutcome {
                            party: self.id,
                            register: r,
                        })?;
                        ctx.send_directed(PartyId::ThirdParty, r, bit)?;
                    }
                }
            }
            CompareStep::Decide => {
                if self.id == PartyId::ThirdParty {
                    self.decide(ctx)?;
                }
            }
        }
        Ok(())
    }
}

fn check_competitors(
    scheme: Scheme,
    secrets: &BTreeMap<PartyId, Vec<u8>>,
) -> Result<usize, ProtocolError> {
    let p = secrets.len();
    if p < 2 {
        return Err(ProtocolError::TooFewCompetitors(p));
    }
    if scheme == Scheme::TwoParty && p != 2 {
        return Err(ProtocolError::Config(format!(
            "two-party comparison needs exactly 2 competitors, got {p}"
        )));
    }
    let m = secrets.values().next().map_or(0, Vec::len);
    if m == 0 || secrets.values().any(|s| s.len() != m) {
        return Err(ProtocolError::Config(
            "secrets must be non-empty and of equal length".into(),
        ));
    }
    Ok(m)
}

/// Runs the comparison on registers already held by the parties.
pub fn compare_on(
    net: &mut Network,
    secrets: &BTreeMap<PartyId, Vec<u8>>,
    layouts: Vec<BitLayout>,
    scheme: Scheme,
) -> Result<ComparisonOutcome, ProtocolError> {
    let m = check_competitors(scheme, secrets)?;
    if layouts.len() != m {
        return Err(ProtocolError::Config(format!(
            "{m} secret bits but {} layouts",
            layouts.len()
        )));
    }
    if !net.has_third_party() {
        return Err(ProtocolError::Config(
            "comparison needs the third party".into(),
        ));
    }
    let mut parties: Vec<SlotHolder> = net
        .parties()
        .into_iter()
        .map(|id| SlotHolder {
            id,
            secret: secrets.get(&id).cloned(),
            layouts: layouts.clone(),
            k: Vec::new(),
            parities: Vec::new(),
            verdict: None,
        })
        .collect();
    let mut machines: Vec<&mut dyn PartyMachine<CompareStep>> = parties
        .iter_mut()
        .map(|p| p as &mut dyn PartyMachine<CompareStep>)
        .collect();
    net.run_rounds(&mut machines, &COMPARE_SCHEDULE)?;

    let competitor = secrets.keys().next().copied().expect("checked above");
    let k = parties
        .iter()
        .find(|p| p.id == competitor)
        .map(|p| p.k.clone())
        .unwrap_or_default();
    let tp = parties
        .into_iter()
        .find(|p| p.id == PartyId::ThirdParty)
        .expect("network has a TP");
    Ok(ComparisonOutcome {
        verdict: tp.verdict.expect("TP decided"),
        k,
        parities: tp.parities,
        layouts,
    })
}

/// Fresh-resource comparison among the holders of `config.secrets`.
///
/// With `fixed_k`, the `F` registers are dealt already collapsed to
/// `|k…k⟩`, which is the post-measurement state for outcome `k`. This lets
/// tests enumerate `k` instead of sampling it.
pub fn run_comparison(
    config: &ProtocolConfig,
    scheme: Scheme,
    fixed_k: Option<&[u8]>,
) -> Result<ComparisonReport, ProtocolError> {
    config.check_common()?;
    let (m, secrets) = config.parsed_secrets()?;
    check_competitors(scheme, &secrets)?;
    if let Some(k) = fixed_k {
        if k.len() != m || k.iter().any(|b| *b > 1) {
            return Err(ProtocolError::Config(format!("fixed k must be {m} bits")));
        }
    }
    let n = config.n;
    let mut net = Network::new(
        n,
        true,
        config.backend,
        stream_rng(config.seed, StageStream::Comparison, Role::Nature),
    );
    let f = (0..m)
        .map(|j| match fixed_k {
            Some(k) => net.create_product_register(n, k[j]),
            None => net.create_register(n),
        })
        .collect::<Result<Vec<_>, _>>()?;
    let q = (0..m * slots_per_bit(scheme, n))
        .map(|_| net.create_register(n + 1))
        .collect::<Result<Vec<_>, _>>()?;
    let all: Vec<RegisterId> = f.iter().chain(&q).copied().collect();
    let assignment = net.canonical_assignment(&all)?;
    net.deal_particles(&all, &assignment, Endpoint::Source, None)?;
    let layouts = BitLayout::from_pools(scheme, n, &f, &q)?;
    let outcome = compare_on(&mut net, &secrets, layouts, scheme)?;
    Ok(ComparisonReport {
        outcome,
        scheme,
        transcript: net.finish(),
    })
}

/// Two-party comparison of the two secrets in `config`.
pub fn run_aqpc_two(config: &ProtocolConfig) -> Result<ComparisonReport, ProtocolError> {
    run_comparison(config, Scheme::TwoParty, None)
}

/// Multi-party comparison of every secret in `config`.
pub fn run_aqpc_multi(config: &ProtocolConfig) -> Result<ComparisonReport, ProtocolError> {
    run_comparison(config, Scheme::Multi, None)
}
