use std::collections::{BTreeMap, BTreeSet};

use super::transcript::{
    AbortReason, AnnouncedVerdict, AppliedGate, Endpoint, EventKind, Message, Transcript,
};
use super::{NetError, PartyId};
use crate::ghz::{Backend, DiagonalGate, EngineError, GhzRegister, RegisterId, SimRng};

/// `(register, qubit, owner)` triples describing who receives which particle.
pub type Assignment = Vec<(RegisterId, usize, PartyId)>;

/// One qubit crossing the quantum channel.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Transit {
    pub register: RegisterId,
    /// Position of the register within the batch being dealt.
    pub position: usize,
    pub qubit: usize,
    pub from: Endpoint,
    pub to: PartyId,
}

/// Adversary hook on the quantum channel. Called once per qubit in transit;
/// returning `Some(tag)` records a `QubitTampered` event.
pub trait ChannelTap {
    fn on_transit(
        &mut self,
        transit: &Transit,
        register: &mut GhzRegister,
    ) -> Result<Option<String>, EngineError>;

    /// Called once the protocol using the tapped particles has finished,
    /// before the transcript is closed. Lets the adversary measure what it kept.
    fn after_run(&mut self, _net: &mut Network) -> Result<(), EngineError> {
        Ok(())
    }
}

/// A party's behaviour, driven one scheduled step at a time.
pub trait PartyMachine<S> {
    fn id(&self) -> PartyId;
    fn step(&mut self, step: &S, ctx: &mut Ctx<'_>) -> Result<(), NetError>;
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RunStatus {
    Completed,
    Aborted(AbortReason),
}

/// Shared world of one simulation run: registers, ownership, transcript and
/// the generator that samples measurement outcomes.
pub struct Network {
    agents: usize,
    third_party: bool,
    backend: Backend,
    registers: BTreeMap<RegisterId, GhzRegister>,
    owners: BTreeMap<(RegisterId, usize), PartyId>,
    transcript: Transcript,
    // event positions of bit-carrying messages, per register
    bit_messages: BTreeMap<RegisterId, Vec<usize>>,
    nature: SimRng,
    next_id: RegisterId,
    round: u64,
    pending_abort: Option<AbortReason>,
}

impl Network {
    pub fn new(agents: usize, third_party: bool, backend: Backend, nature: SimRng) -> Self {
        Network {
            agents,
            third_party,
            backend,
            registers: BTreeMap::new(),
            owners: BTreeMap::new(),
            transcript: Transcript::default(),
            bit_messages: BTreeMap::new(),
            nature,
            next_id: 1,
            round: 0,
            pending_abort: None,
        }
    }

    pub fn agents(&self) -> usize {
        self.agents
    }

    pub fn has_third_party(&self) -> bool {
        self.third_party
    }

    pub fn backend(&self) -> Backend {
        self.backend
    }

    pub fn round(&self) -> u64 {
        self.round
    }

    /// All parties in scheduler order.
    pub fn parties(&self) -> Vec<PartyId> {
        let mut v: Vec<PartyId> = (1..=self.agents).map(PartyId::Agent).collect();
        if self.third_party {
            v.push(PartyId::ThirdParty);
        }
        v
    }

    pub fn knows(&self, p: PartyId) -> bool {
        match p {
            PartyId::Agent(i) => (1..=self.agents).contains(&i),
            PartyId::ThirdParty => self.third_party,
        }
    }

    pub fn create_register(&mut self, arity: usize) -> Result<RegisterId, NetError> {
        let id = self.next_id;
        let reg = GhzRegister::new(id, arity, self.backend)?;
        self.registers.insert(id, reg);
        self.next_id += 1;
        Ok(id)
    }

    /// A product state handed out in place of a GHZ register.
    pub fn create_product_register(
        &mut self,
        arity: usize,
        bit: u8,
    ) -> Result<RegisterId, NetError> {
        let id = self.next_id;
        let reg = GhzRegister::product(id, arity, bit, self.backend)?;
        self.registers.insert(id, reg);
        self.next_id += 1;
        Ok(id)
    }

    pub fn register(&self, id: RegisterId) -> Option<&GhzRegister> {
        self.registers.get(&id)
    }

    pub fn register_mut(&mut self, id: RegisterId) -> Option<&mut GhzRegister> {
        self.registers.get_mut(&id)
    }

    pub fn owner(&self, register: RegisterId, qubit: usize) -> Option<PartyId> {
        self.owners.get(&(register, qubit)).copied()
    }

    pub fn qubit_of(&self, register: RegisterId, party: PartyId) -> Option<usize> {
        self.owners
            .range((register, 0)..=(register, usize::MAX))
            .find(|(_, p)| **p == party)
            .map(|((_, q), _)| *q)
    }

    /// Party `i` gets qubit `i`; on registers of arity `n + 1` the third
    /// party gets the last qubit.
    pub fn canonical_assignment(&self, registers: &[RegisterId]) -> Result<Assignment, NetError> {
        let mut out = Vec::new();
        for &id in registers {
            let reg = self
                .registers
                .get(&id)
                .ok_or(NetError::UnknownRegister(id))?;
            for q in 1..=reg.arity() {
                let owner = if q <= self.agents {
                    PartyId::Agent(q)
                } else {
                    PartyId::ThirdParty
                };
                if !self.knows(owner) {
                    return Err(NetError::UnknownParty(owner));
                }
                out.push((id, q, owner));
            }
        }
        Ok(out)
    }

    /// Hands out every qubit of `registers` according to `assignment`.
    /// Qubits whose owner is the sender itself never enter the channel.
    pub fn deal_particles(
        &mut self,
        registers: &[RegisterId],
        assignment: &Assignment,
        source: Endpoint,
        mut tap: Option<&mut dyn ChannelTap>,
    ) -> Result<(), NetError> {
        let mut covered = BTreeSet::new();
        for &(reg, q, owner) in assignment {
            let r = self
                .registers
                .get(&reg)
                .ok_or(NetError::UnknownRegister(reg))?;
            if q == 0 || q > r.arity() {
                return Err(EngineError::QubitOutOfRange {
                    index: q,
                    qubits: r.arity(),
                }
                .into());
            }
            if !self.knows(owner) {
                return Err(NetError::UnknownParty(owner));
            }
            if !covered.insert((reg, q)) || self.owners.contains_key(&(reg, q)) {
                return Err(NetError::DuplicateAssignment {
                    register: reg,
                    qubit: q,
                });
            }
        }
        for &reg in registers {
            let arity = self
                .registers
                .get(&reg)
                .ok_or(NetError::UnknownRegister(reg))?
                .arity();
            if let Some(q) = (1..=arity).find(|q| !covered.contains(&(reg, *q))) {
                return Err(NetError::IncompleteAssignment {
                    register: reg,
                    qubit: q,
                });
            }
        }
        if let Some(&(reg, q, _)) = assignment
            .iter()
            .find(|(reg, _, _)| !registers.contains(reg))
        {
            return Err(NetError::DuplicateAssignment {
                register: reg,
                qubit: q,
            });
        }

        for &(reg, q, owner) in assignment {
            self.owners.insert((reg, q), owner);
            if source == Endpoint::Party(owner) {
                continue;
            }
            self.transcript.push(
                self.round,
                EventKind::QubitSent {
                    register: reg,
                    qubit: q,
                    from: source,
                    to: owner,
                },
            );
            if let Some(tap) = tap.as_deref_mut() {
                let transit = Transit {
                    register: reg,
                    position: registers.iter().position(|r| *r == reg).unwrap_or(0),
                    qubit: q,
                    from: source,
                    to: owner,
                };
                let register = self.registers.get_mut(&reg).expect("checked above");
                if let Some(attack) = tap.on_transit(&transit, register)? {
                    self.transcript.push(
                        self.round,
                        EventKind::QubitTampered {
                            register: reg,
                            qubit: q,
                            attack,
                        },
                    );
                }
            }
        }
        Ok(())
    }

    /// Runs `schedule` round by round. Within a round parties act in
    /// ascending id order. An abort announced during a round halts the run
    /// once that round ends; unmeasured registers are then discarded.
    pub fn run_rounds<S>(
        &mut self,
        parties: &mut [&mut dyn PartyMachine<S>],
        schedule: &[S],
    ) -> Result<RunStatus, NetError> {
        parties.sort_by_key(|p| p.id());
        for w in parties.windows(2) {
            if w[0].id() == w[1].id() {
                return Err(NetError::DuplicateParty(w[0].id()));
            }
        }
        for p in parties.iter() {
            if !self.knows(p.id()) {
                return Err(NetError::UnknownParty(p.id()));
            }
        }
        for step in schedule {
            self.round += 1;
            for party in parties.iter_mut() {
                let actor = party.id();
                let mut ctx = Ctx { net: self, actor };
                party
                    .step(step, &mut ctx)
                    .map_err(|e| NetError::PartyFailed {
                        party: actor,
                        round: self.round,
                        message: e.to_string(),
                    })?;
            }
            if let Some(reason) = self.pending_abort.take() {
                self.transcript.push(
                    self.round,
                    EventKind::Abort {
                        reason: reason.clone(),
                    },
                );
                self.registers.retain(|_, r| r.is_consumed());
                return Ok(RunStatus::Aborted(reason));
            }
        }
        Ok(RunStatus::Completed)
    }

    pub fn transcript(&self) -> &Transcript {
        &self.transcript
    }

    /// Closes the run and hands back its transcript.
    pub fn finish(mut self) -> Transcript {
        self.transcript.push(self.round, EventKind::RunComplete);
        self.transcript
    }

    fn emit(&mut self, message: Message) {
        let register = match &message {
            Message::BroadcastBit { register, .. } | Message::DirectedBit { register, .. } => {
                Some(*register)
            }
            _ => None,
        };
        let pos = self
            .transcript
            .push(self.round, EventKind::MessageSent { message });
        if let Some(r) = register {
            self.bit_messages.entry(r).or_default().push(pos);
        }
    }
}

/// A party's handle on the network during its turn. Every message it emits
/// carries its own identity as sender; there is no way to speak for others.
pub struct Ctx<'a> {
    net: &'a mut Network,
    actor: PartyId,
}

impl Ctx<'_> {
    pub fn actor(&self) -> PartyId {
        self.actor
    }

    pub fn round(&self) -> u64 {
        self.net.round
    }

    pub fn agents(&self) -> usize {
        self.net.agents
    }

    pub fn my_qubit(&self, register: RegisterId) -> Result<usize, NetError> {
        self.net
            .qubit_of(register, self.actor)
            .ok_or(NetError::NotOwner {
                party: self.actor,
                register,
            })
    }

    fn my_register(&mut self, register: RegisterId) -> Result<(usize, &mut GhzRegister), NetError> {
        let q = self.my_qubit(register)?;
        let reg = self
            .net
            .registers
            .get_mut(&register)
            .ok_or(NetError::UnknownRegister(register))?;
        Ok((q, reg))
    }

    pub fn apply_gate(&mut self, register: RegisterId, gate: DiagonalGate) -> Result<(), NetError> {
        let (q, reg) = self.my_register(register)?;
        reg.apply_diagonal(q, gate)?;
        self.log_gate(register, q, gate.into());
        Ok(())
    }

    pub fn apply_hadamard(&mut self, register: RegisterId) -> Result<(), NetError> {
        let (q, reg) = self.my_register(register)?;
        reg.apply_hadamard(q)?;
        self.log_gate(register, q, AppliedGate::Hadamard);
        Ok(())
    }

    fn log_gate(&mut self, register: RegisterId, qubit: usize, gate: AppliedGate) {
        let party = self.actor;
        self.net.transcript.push(
            self.net.round,
            EventKind::GateApplied {
                party,
                register,
                qubit,
                gate,
            },
        );
    }

    /// Computational-basis measurement of the actor's qubit.
    pub fn measure(&mut self, register: RegisterId) -> Result<u8, NetError> {
        let q = self.my_qubit(register)?;
        let net = &mut *self.net;
        let reg = net
            .registers
            .get_mut(&register)
            .ok_or(NetError::UnknownRegister(register))?;
        let bit = reg.measure_computational(q, &mut net.nature)?;
        net.transcript.push(
            net.round,
            EventKind::Measurement {
                party: self.actor,
                register,
                qubit: q,
                bit,
            },
        );
        Ok(bit)
    }

    /// The actor's recorded outcome on `register`, if it has measured.
    pub fn my_outcome(&self, register: RegisterId) -> Option<u8> {
        let q = self.net.qubit_of(register, self.actor)?;
        self.net.registers.get(&register)?.outcome(q)
    }

    fn require_outcome(&self, register: RegisterId) -> Result<(), NetError> {
        self.my_outcome(register)
            .map(|_| ())
            .ok_or(NetError::NoOutcome {
                party: self.actor,
                register,
            })
    }

    pub fn broadcast(&mut self, register: RegisterId, bit: u8) -> Result<(), NetError> {
        self.require_outcome(register)?;
        let sender = self.actor;
        self.net.emit(Message::BroadcastBit {
            sender,
            register,
            bit,
        });
        Ok(())
    }

    /// Sends a bit about `register` over the authenticated pairwise channel.
    pub fn send_directed(
        &mut self,
        receiver: PartyId,
        register: RegisterId,
        bit: u8,
    ) -> Result<(), NetError> {
        if receiver == self.actor {
            return Err(NetError::SelfSend(receiver));
        }
        if !self.net.knows(receiver) {
            return Err(NetError::UnknownParty(receiver));
        }
        let sender = self.actor;
        self.net.emit(Message::DirectedBit {
            sender,
            receiver,
            register,
            bit,
        });
        Ok(())
    }

    pub fn announce_security(&mut self, register: RegisterId, h: u8) {
        let sender = self.actor;
        self.net.emit(Message::SecurityAnnounce {
            sender,
            register,
            h,
        });
    }

    pub fn announce_verdict(&mut self, verdict: AnnouncedVerdict) {
        let sender = self.actor;
        self.net.emit(Message::VerdictAnnounce { sender, verdict });
    }

    /// Broadcasts an abort; the scheduler halts at the end of this round.
    /// Only the first abort of a round is sent.
    pub fn abort(&mut self, reason: AbortReason) {
        if self.net.pending_abort.is_some() {
            return;
        }
        let sender = self.actor;
        self.net.emit(Message::AbortNotice {
            sender,
            reason: reason.clone(),
        });
        self.net.pending_abort = Some(reason);
    }

    pub fn abort_pending(&self) -> bool {
        self.net.pending_abort.is_some()
    }

    /// Bits about `register` the actor can see: all broadcasts plus directed
    /// messages it sent or received. Returned as `(sender, bit)` in send order.
    pub fn visible_bits(&self, register: RegisterId) -> Vec<(PartyId, u8)> {
        let Some(positions) = self.net.bit_messages.get(&register) else {
            return Vec::new();
        };
        let events = self.net.transcript.events();
        positions
            .iter()
            .filter_map(|&i| match &events[i].kind {
                EventKind::MessageSent {
                    message: Message::BroadcastBit { sender, bit, .. },
                } => Some((*sender, *bit)),
                EventKind::MessageSent {
                    message:
                        Message::DirectedBit {
                            sender,
                            receiver,
                            bit,
                            ..
                        },
                } if *sender == self.actor || *receiver == self.actor => Some((*sender, *bit)),
                _ => None,
            })
            .collect()
    }

    /// Most recent security-check announcement, if any.
    pub fn last_security_announce(&self) -> Option<(PartyId, RegisterId, u8)> {
        self.net
            .transcript
            .events()
            .iter()
            .rev()
            .find_map(|e| match e.kind {
                EventKind::MessageSent {
                    message:
                        Message::SecurityAnnounce {
                            sender,
                            register,
                            h,
                        },
                } => Some((sender, register, h)),
                _ => None,
            })
    }
}
