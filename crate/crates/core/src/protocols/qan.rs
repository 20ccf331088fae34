//! Anonymous notification: the fully anonymous variant (any agent may
//! notify any agent) and the receiver-anonymous variant where the third
//! party is the notifier.

use std::collections::BTreeMap;

use rand::Rng;

use super::{ProtocolConfig, ProtocolError};
use crate::ghz::{DiagonalGate, RegisterId, SimRng};
use crate::netsim::{Ctx, Endpoint, NetError, Network, PartyId, PartyMachine, Transcript};
use crate::seed::{stream_rng, Role, StageStream};

#[derive(Clone, Debug, PartialEq)]
pub struct QanOutcome {
    pub notified: BTreeMap<PartyId, bool>,
    /// `per_run_parities[run][j - 1]` is `m_j` as computed by agent `j`.
    pub per_run_parities: Vec<Vec<u8>>,
}

impl QanOutcome {
    fn from_parities(per_run_parities: Vec<Vec<u8>>, n: usize) -> Self {
        let notified = (1..=n)
            .map(|j| {
                let hit = per_run_parities.iter().any(|run| run[j - 1] == 1);
                (PartyId::Agent(j), hit)
            })
            .collect();
        QanOutcome {
            notified,
            per_run_parities,
        }
    }

    pub fn notified_set(&self) -> Vec<usize> {
        self.notified
            .iter()
            .filter(|(_, v)| **v)
            .filter_map(|(p, _)| p.agent_index())
            .collect()
    }
}

#[derive(Clone, Debug)]
pub struct QanRun {
    pub outcome: QanOutcome,
    pub transcript: Transcript,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum QanStep {
    Encode,
    Measure,
    Announce,
    Decide,
}

const QAN_SCHEDULE: [QanStep; 4] = [
    QanStep::Encode,
    QanStep::Measure,
    QanStep::Announce,
    QanStep::Decide,
];

fn measure_all(ctx: &mut Ctx<'_>, registers: &[RegisterId]) -> Result<(), NetError> {
    for &r in registers {
        ctx.apply_hadamard(r)?;
        ctx.measure(r)?;
    }
    Ok(())
}

fn own_bit(ctx: &Ctx<'_>, register: RegisterId) -> Result<u8, NetError> {
    ctx.my_outcome(register).ok_or(NetError::NoOutcome {
        party: ctx.actor(),
        register,
    })
}

/// Agent in the fully anonymous protocol. Register `j` of a run is the one
/// that notifies agent `j`.
struct QanAgent {
    index: usize,
    target: Option<usize>,
    p_z: f64,
    coins: SimRng,
    registers: Vec<RegisterId>,
    parities: Vec<u8>,
}

impl PartyMachine<QanStep> for QanAgent {
    fn id(&self) -> PartyId {
        PartyId::Agent(self.index)
    }

    fn step(&mut self, step: &QanStep, ctx: &mut Ctx<'_>) -> Result<(), NetError> {
        match step {
            QanStep::Encode => {
                for (j, &r) in self.registers.iter().enumerate() {
                    let flip = self.target == Some(j + 1) && self.coins.random_bool(self.p_z);
                    let gate = if flip {
                        DiagonalGate::PauliZ
                    } else {
                        DiagonalGate::Identity
                    };
                    ctx.apply_gate(r, gate)?;
                }
            }
            QanStep::Measure => measure_all(ctx, &self.registers)?,
            QanStep::Announce => {
                for (j, &r) in self.registers.iter().enumerate() {
                    if j + 1 != self.index {
                        let bit = own_bit(ctx, r)?;
                        ctx.broadcast(r, bit)?;
                    }
                }
            }
            QanStep::Decide => {
                let mine = self.registers[self.index - 1];
                let parity = ctx
                    .visible_bits(mine)
                    .iter()
                    .fold(own_bit(ctx, mine)?, |acc, (_, b)| acc ^ b);
                self.parities.push(parity);
            }
        }
        Ok(())
    }
}

/// Runs the fully anonymous notification protocol `K` times.
///
/// Each sender in `notify_requests` flips the phase of its receiver's
/// register with probability `P_Z` per run. Senders may target themselves.
/// Two senders hitting the same receiver in one run cancel each other.
pub fn run_qan(config: &ProtocolConfig) -> Result<QanRun, ProtocolError> {
    config.check_common()?;
    if config.n < 3 {
        return Err(ProtocolError::Config(format!(
            "anonymous notification needs n >= 3, got {}",
            config.n
        )));
    }
    let n = config.n;
    let mut net = Network::new(
        n,
        false,
        config.backend,
        stream_rng(config.seed, StageStream::Network, Role::Nature),
    );
    let mut agents: Vec<QanAgent> = (1..=n)
        .map(|i| QanAgent {
            index: i,
            target: config.notify_requests.get(&i).copied(),
            p_z: config.p_z,
            coins: stream_rng(
                config.seed,
                StageStream::Notification,
                Role::Party(PartyId::Agent(i)),
            ),
            registers: Vec::new(),
            parities: Vec::new(),
        })
        .collect();

    for _ in 0..config.k {
        let registers = (0..n)
            .map(|_| net.create_register(n))
            .collect::<Result<Vec<_>, _>>()?;
        let assignment = net.canonical_assignment(&registers)?;
        net.deal_particles(&registers, &assignment, Endpoint::Source, None)?;
        for a in agents.iter_mut() {
            a.registers = registers.clone();
        }
        let mut machines: Vec<&mut dyn PartyMachine<QanStep>> = agents
            .iter_mut()
            .map(|a| a as &mut dyn PartyMachine<QanStep>)
            .collect();
        net.run_rounds(&mut machines, &QAN_SCHEDULE)?;
    }

    let per_run = (0..config.k)
        .map(|run| agents.iter().map(|a| a.parities[run]).collect())
        .collect();
    Ok(QanRun {
        outcome: QanOutcome::from_parities(per_run, n),
        transcript: net.finish(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum ModifiedStep {
    Encode,
    Measure,
    Report,
    Aggregate,
    Decide,
}

const MODIFIED_SCHEDULE: [ModifiedStep; 5] = [
    ModifiedStep::Encode,
    ModifiedStep::Measure,
    ModifiedStep::Report,
    ModifiedStep::Aggregate,
    ModifiedStep::Decide,
];

struct NotifyingTp {
    targets: Vec<usize>,
    p_z: f64,
    coins: SimRng,
    registers: Vec<RegisterId>,
}

impl PartyMachine<ModifiedStep> for NotifyingTp {
    fn id(&self) -> PartyId {
        PartyId::ThirdParty
    }

    fn step(&mut self, step: &ModifiedStep, ctx: &mut Ctx<'_>) -> Result<(), NetError> {
        match step {
            ModifiedStep::Encode => {
                for (j, &r) in self.registers.iter().enumerate() {
                    let flip = self.targets.contains(&(j + 1)) && self.coins.random_bool(self.p_z);
                    let gate = if flip {
                        DiagonalGate::PauliZ
                    } else {
                        DiagonalGate::Identity
                    };
                    ctx.apply_gate(r, gate)?;
                }
            }
            ModifiedStep::Measure => measure_all(ctx, &self.registers)?,
            ModifiedStep::Aggregate => {
                for (j, &r) in self.registers.iter().enumerate() {
                    // every agent except j reported on register j
                    let aggregate = ctx
                        .visible_bits(r)
                        .iter()
                        .fold(own_bit(ctx, r)?, |acc, (_, b)| acc ^ b);
                    ctx.send_directed(PartyId::Agent(j + 1), r, aggregate)?;
                }
            }
            ModifiedStep::Report | ModifiedStep::Decide => {}
        }
        Ok(())
    }
}

struct NotifiedAgent {
    index: usize,
    registers: Vec<RegisterId>,
    parities: Vec<u8>,
}

impl PartyMachine<ModifiedStep> for NotifiedAgent {
    fn id(&self) -> PartyId {
        PartyId::Agent(self.index)
    }

    fn step(&mut self, step: &ModifiedStep, ctx: &mut Ctx<'_>) -> Result<(), NetError> {
        match step {
            ModifiedStep::Measure => measure_all(ctx, &self.registers)?,
            ModifiedStep::Report => {
                for (j, &r) in self.registers.iter().enumerate() {
                    if j + 1 != self.index {
                        let bit = own_bit(ctx, r)?;
                        ctx.send_directed(PartyId::ThirdParty, r, bit)?;
                    }
                }
            }
            ModifiedStep::Decide => {
                let mine = self.registers[self.index - 1];
                let from_tp = ctx
                    .visible_bits(mine)
                    .iter()
                    .filter(|(s, _)| *s == PartyId::ThirdParty)
                    .fold(0, |acc, (_, b)| acc ^ b);
                self.parities.push(own_bit(ctx, mine)? ^ from_tp);
            }
            ModifiedStep::Encode | ModifiedStep::Aggregate => {}
        }
        Ok(())
    }
}

/// Receiver-anonymous notification on an existing network with a third
/// party: the TP notifies `targets`, `repetitions` times.
pub(crate) fn modified_qan_on(
    net: &mut Network,
    targets: &[usize],
    p_z: f64,
    repetitions: usize,
    seed: u64,
) -> Result<QanOutcome, ProtocolError> {
    let n = net.agents();
    let mut tp = NotifyingTp {
        targets: targets.to_vec(),
        p_z,
        coins: stream_rng(
            seed,
            StageStream::Notification,
            Role::Party(PartyId::ThirdParty),
        ),
        registers: Vec::new(),
    };
    let mut agents: Vec<NotifiedAgent> = (1..=n)
        .map(|i| NotifiedAgent {
            index: i,
            registers: Vec::new(),
            parities: Vec::new(),
        })
        .collect();
    for _ in 0..repetitions {
        let registers = (0..n)
            .map(|_| net.create_register(n + 1))
            .collect::<Result<Vec<_>, _>>()?;
        let assignment = net.canonical_assignment(&registers)?;
        net.deal_particles(&registers, &assignment, Endpoint::Source, None)?;
        tp.registers = registers.clone();
        for a in agents.iter_mut() {
            a.registers = registers.clone();
        }
        let mut machines: Vec<&mut dyn PartyMachine<ModifiedStep>> = vec![&mut tp];
        machines.extend(
            agents
                .iter_mut()
                .map(|a| a as &mut dyn PartyMachine<ModifiedStep>),
        );
        net.run_rounds(&mut machines, &MODIFIED_SCHEDULE)?;
    }
    let per_run = (0..repetitions)
        .map(|run| agents.iter().map(|a| a.parities[run]).collect())
        .collect();
    Ok(QanOutcome::from_parities(per_run, n))
}

/// Receiver-anonymous notification with the third party as notifier.
/// Targets come from `tp_targets`.
pub fn run_modified_qan(config: &ProtocolConfig) -> Result<QanRun, ProtocolError> {
    config.check_common()?;
    let mut net = Network::new(
        config.n,
        true,
        config.backend,
        stream_rng(config.seed, StageStream::Network, Role::Nature),
    );
    let targets: Vec<usize> = config.tp_targets.iter().copied().collect();
    let outcome = modified_qan_on(&mut net, &targets, config.p_z, config.k, config.seed)?;
    Ok(QanRun {
        outcome,
        transcript: net.finish(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ghz::Backend;
    use crate::netsim::{AppliedGate, EventKind, Observer};

    fn config(n: usize) -> ProtocolConfig {
        ProtocolConfig::new(n).with_seed(3)
    }

    fn z_count(t: &Transcript, register: RegisterId) -> usize {
        t.count(|k| {
            matches!(k, EventKind::GateApplied { register: r, gate: AppliedGate::PauliZ, .. } if *r == register)
        })
    }

    #[test]
    fn no_senders_means_no_notification() {
        let mut c = config(5);
        c.k = 4;
        let run = run_qan(&c).unwrap();
        assert!(run.outcome.notified.values().all(|v| !v));
        assert!(run
            .outcome
            .per_run_parities
            .iter()
            .flatten()
            .all(|m| *m == 0));
    }

    #[test]
    fn certain_single_sender_notifies_only_target() {
        for backend in [Backend::Phase, Backend::Dense] {
            for seed in 0..20 {
                let mut c = config(4).with_backend(backend).with_seed(seed);
                c.notify_requests.insert(2, 4);
                let run = run_qan(&c).unwrap();
                assert_eq!(run.outcome.notified_set(), vec![4]);
            }
        }
    }

    #[test]
    fn colliding_senders_cancel() {
        for backend in [Backend::Phase, Backend::Dense] {
            let mut c = config(4).with_backend(backend);
            c.notify_requests.insert(1, 3);
            c.notify_requests.insert(2, 3);
            let run = run_qan(&c).unwrap();
            assert_eq!(run.outcome.per_run_parities[0][2], 0);
            assert!(run.outcome.notified_set().is_empty());
        }
    }

    #[test]
    fn self_notification_is_allowed() {
        let mut c = config(3);
        c.notify_requests.insert(2, 2);
        assert_eq!(run_qan(&c).unwrap().outcome.notified_set(), vec![2]);
    }

    #[test]
    fn parity_identity_every_run() {
        let mut c = config(5);
        c.k = 6;
        c.p_z = 0.5;
        c.notify_requests = [(1, 2), (3, 2), (4, 5), (5, 1)].into_iter().collect();
        for seed in 0..10 {
            c.seed = seed;
            let run = run_qan(&c).unwrap();
            let t = &run.transcript;
            // registers are numbered run by run, 1-based
            for (rn, parities) in run.outcome.per_run_parities.iter().enumerate() {
                for (j, parity) in parities.iter().enumerate() {
                    let reg = (rn * 5 + j + 1) as RegisterId;
                    assert_eq!(*parity as usize, z_count(t, reg) % 2);
                }
            }
        }
    }

    #[test]
    fn small_networks_rejected() {
        assert!(matches!(run_qan(&config(2)), Err(ProtocolError::Config(_))));
    }

    #[test]
    fn deterministic_transcripts() {
        let mut c = config(4);
        c.notify_requests.insert(1, 3);
        c.p_z = 0.5;
        c.k = 3;
        let a = run_qan(&c).unwrap().transcript.to_ndjson();
        let b = run_qan(&c).unwrap().transcript.to_ndjson();
        assert_eq!(a, b);
    }

    #[test]
    fn views_are_sound() {
        let mut c = config(4);
        c.notify_requests.insert(1, 3);
        let run = run_qan(&c).unwrap();
        let parties: Vec<_> = (1..=4).map(PartyId::Agent).collect();
        assert!(run.transcript.check_view_soundness(&parties).is_ok());
        assert!(run.transcript.check_conservation().is_ok());
        // nobody but agent 1 sees agent 1's gate choices
        let v = run.transcript.view(Observer::Party(PartyId::Agent(2)));
        assert!(v.events().iter().all(|e| !matches!(
            e.kind,
            EventKind::GateApplied {
                party: PartyId::Agent(1),
                ..
            }
        )));
    }

    #[test]
    fn modified_qan_notifies_targets() {
        for backend in [Backend::Phase, Backend::Dense] {
            let mut c = config(4).with_backend(backend);
            c.tp_targets = [2, 4].into_iter().collect();
            let run = run_modified_qan(&c).unwrap();
            assert_eq!(run.outcome.notified_set(), vec![2, 4]);

            c.tp_targets.clear();
            assert!(run_modified_qan(&c)
                .unwrap()
                .outcome
                .notified_set()
                .is_empty());
        }
    }

    #[test]
    fn modified_qan_reports_are_directed() {
        let mut c = config(4);
        c.tp_targets = [3].into_iter().collect();
        let run = run_modified_qan(&c).unwrap();
        let t = &run.transcript;
        assert_eq!(
            t.count(|k| matches!(
                k,
                EventKind::MessageSent {
                    message: crate::netsim::Message::BroadcastBit { .. }
                }
            )),
            0
        );
        // agent 1 sees only its own reports and the TP's bit for register 1
        let v = t.view(Observer::Party(PartyId::Agent(1)));
        for reg in 1..=4 {
            let bits = v.bits_for(reg);
            if reg == 1 {
                assert_eq!(bits.len(), 1);
                assert_eq!(bits[0].0, PartyId::ThirdParty);
            } else {
                assert_eq!(bits, vec![(PartyId::Agent(1), bits[0].1)]);
            }
        }
    }
}
