use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::PartyId;
use crate::ghz::{DiagonalGate, RegisterId};

/// Where a qubit in transit comes from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Endpoint {
    /// An external GHZ source outside the party set.
    Source,
    Party(PartyId),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "gate")]
pub enum AppliedGate {
    Identity,
    PauliZ,
    PhaseG { g: u32 },
    Hadamard,
}

impl From<DiagonalGate> for AppliedGate {
    fn from(g: DiagonalGate) -> Self {
        match g {
            DiagonalGate::Identity => AppliedGate::Identity,
            DiagonalGate::PauliZ => AppliedGate::PauliZ,
            DiagonalGate::PhaseG { g } => AppliedGate::PhaseG { g },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "code", rename_all = "snake_case")]
pub enum AbortReason {
    InconsistentOutcomes {
        register: RegisterId,
        h: u8,
    },
    MissingAnnouncement {
        register: RegisterId,
        party: PartyId,
    },
}

/// The equality decision as it travels on the classical channel.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnouncedVerdict {
    pub equal: bool,
    pub per_bit: Vec<bool>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Message {
    BroadcastBit {
        sender: PartyId,
        register: RegisterId,
        bit: u8,
    },
    DirectedBit {
        sender: PartyId,
        receiver: PartyId,
        register: RegisterId,
        bit: u8,
    },
    SecurityAnnounce {
        sender: PartyId,
        register: RegisterId,
        h: u8,
    },
    AbortNotice {
        sender: PartyId,
        reason: AbortReason,
    },
    VerdictAnnounce {
        sender: PartyId,
        verdict: AnnouncedVerdict,
    },
}

impl Message {
    pub fn sender(&self) -> PartyId {
        match self {
            Message::BroadcastBit { sender, .. }
            | Message::DirectedBit { sender, .. }
            | Message::SecurityAnnounce { sender, .. }
            | Message::AbortNotice { sender, .. }
            | Message::VerdictAnnounce { sender, .. } => *sender,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EventKind {
    MessageSent {
        message: Message,
    },
    QubitSent {
        register: RegisterId,
        qubit: usize,
        from: Endpoint,
        to: PartyId,
    },
    QubitTampered {
        register: RegisterId,
        qubit: usize,
        attack: String,
    },
    Measurement {
        party: PartyId,
        register: RegisterId,
        qubit: usize,
        bit: u8,
    },
    GateApplied {
        party: PartyId,
        register: RegisterId,
        qubit: usize,
        gate: AppliedGate,
    },
    Abort {
        reason: AbortReason,
    },
    RunComplete,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub seq: u64,
    pub round: u64,
    pub kind: EventKind,
}

impl Event {
    pub fn actor(&self) -> Option<PartyId> {
        match &self.kind {
            EventKind::MessageSent { message } => Some(message.sender()),
            EventKind::QubitSent { from, .. } => match from {
                Endpoint::Party(p) => Some(*p),
                Endpoint::Source => None,
            },
            EventKind::Measurement { party, .. } | EventKind::GateApplied { party, .. } => {
                Some(*party)
            }
            EventKind::QubitTampered { .. } | EventKind::Abort { .. } | EventKind::RunComplete => {
                None
            }
        }
    }

    /// Private events are seen only by their actor (tampering: only by the
    /// eavesdropper).
    pub fn is_private(&self) -> bool {
        matches!(
            self.kind,
            EventKind::Measurement { .. }
                | EventKind::GateApplied { .. }
                | EventKind::QubitTampered { .. }
        )
    }

    fn kind_name(&self) -> &'static str {
        match self.kind {
            EventKind::MessageSent { .. } => "message_sent",
            EventKind::QubitSent { .. } => "qubit_sent",
            EventKind::QubitTampered { .. } => "qubit_tampered",
            EventKind::Measurement { .. } => "measurement",
            EventKind::GateApplied { .. } => "gate_applied",
            EventKind::Abort { .. } => "abort",
            EventKind::RunComplete => "run_complete",
        }
    }

    fn visible_to_party(&self, p: PartyId) -> bool {
        match &self.kind {
            EventKind::MessageSent {
                message:
                    Message::DirectedBit {
                        sender, receiver, ..
                    },
            } => *sender == p || *receiver == p,
            EventKind::QubitTampered { .. } => false,
            EventKind::Measurement { party, .. } | EventKind::GateApplied { party, .. } => {
                *party == p
            }
            _ => true,
        }
    }

    pub fn visible_to(&self, observer: &Observer) -> bool {
        match observer {
            Observer::Party(p) => self.visible_to_party(*p),
            Observer::Coalition(members) => members.iter().any(|m| self.visible_to_party(*m)),
            Observer::Eavesdropper => match &self.kind {
                EventKind::QubitTampered { .. } => true,
                EventKind::MessageSent {
                    message: Message::DirectedBit { .. },
                } => false,
                _ => !self.is_private(),
            },
        }
    }
}

/// One line of the newline-delimited transcript export.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    pub seq: u64,
    pub round: u64,
    pub kind: String,
    pub actor: Option<String>,
    pub payload: serde_json::Value,
    pub private: bool,
}

impl From<&Event> for EventRecord {
    fn from(e: &Event) -> Self {
        let mut payload = serde_json::to_value(&e.kind).expect("event kinds serialize");
        if let Some(obj) = payload.as_object_mut() {
            obj.remove("kind");
        }
        EventRecord {
            seq: e.seq,
            round: e.round,
            kind: e.kind_name().to_string(),
            actor: e.actor().map(|p| p.to_string()),
            payload,
            private: e.is_private(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Observer {
    Party(PartyId),
    Coalition(BTreeSet<PartyId>),
    /// Outside adversary on the quantum channel; sees public traffic and its
    /// own tampering.
    Eavesdropper,
}

/// Append-only, totally ordered log of one run.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Transcript {
    events: Vec<Event>,
}

impl Transcript {
    pub(crate) fn push(&mut self, round: u64, kind: EventKind) -> usize {
        let seq = self.events.len() as u64;
        self.events.push(Event { seq, round, kind });
        self.events.len() - 1
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn view(&self, observer: Observer) -> PartyView {
        let events = self
            .events
            .iter()
            .filter(|e| e.visible_to(&observer))
            .cloned()
            .collect();
        PartyView { observer, events }
    }

    pub fn to_ndjson(&self) -> String {
        let mut out = String::new();
        for e in &self.events {
            let line = serde_json::to_string(&EventRecord::from(e)).expect("records serialize");
            let _ = writeln!(out, "{line}");
        }
        out
    }

    pub fn count(&self, pred: impl Fn(&EventKind) -> bool) -> usize {
        self.events.iter().filter(|e| pred(&e.kind)).count()
    }

    /// Checks that no party's view holds another party's private events.
    /// Returns the first offending `(observer, seq)` if any.
    pub fn check_view_soundness(&self, parties: &[PartyId]) -> Result<(), (PartyId, u64)> {
        for p in parties {
            let view = self.view(Observer::Party(*p));
            for e in view.events() {
                let foreign = match &e.kind {
                    EventKind::QubitTampered { .. } => true,
                    _ => e.is_private() && e.actor() != Some(*p),
                };
                if foreign {
                    return Err((*p, e.seq));
                }
            }
        }
        Ok(())
    }

    /// Every `(register, qubit)` is measured at most once.
    pub fn check_conservation(&self) -> Result<(), (RegisterId, usize)> {
        let mut seen = BTreeMap::new();
        for e in &self.events {
            if let EventKind::Measurement {
                register, qubit, ..
            } = e.kind
            {
                if seen.insert((register, qubit), ()).is_some() {
                    return Err((register, qubit));
                }
            }
        }
        Ok(())
    }
}

/// The subset of a transcript one observer legitimately sees.
#[derive(Clone, Debug, PartialEq)]
pub struct PartyView {
    pub observer: Observer,
    events: Vec<Event>,
}

impl PartyView {
    pub fn events(&self) -> &[Event] {
        &self.events
    }

    /// Union of several single-party views, in transcript order.
    pub fn union(views: &[PartyView]) -> PartyView {
        let mut members = BTreeSet::new();
        let mut merged: BTreeMap<u64, Event> = BTreeMap::new();
        for v in views {
            match &v.observer {
                Observer::Party(p) => {
                    members.insert(*p);
                }
                Observer::Coalition(m) => members.extend(m.iter().copied()),
                Observer::Eavesdropper => {}
            }
            for e in &v.events {
                merged.entry(e.seq).or_insert_with(|| e.clone());
            }
        }
        PartyView {
            observer: Observer::Coalition(members),
            events: merged.into_values().collect(),
        }
    }

    /// Every announced bit about `register` this observer saw, with sender.
    pub fn bits_for(&self, register: RegisterId) -> Vec<(PartyId, u8)> {
        self.events
            .iter()
            .filter_map(|e| match &e.kind {
                EventKind::MessageSent {
                    message:
                        Message::BroadcastBit {
                            sender,
                            register: r,
                            bit,
                        },
                }
                | EventKind::MessageSent {
                    message:
                        Message::DirectedBit {
                            sender,
                            register: r,
                            bit,
                            ..
                        },
                } if *r == register => Some((*sender, *bit)),
                _ => None,
            })
            .collect()
    }

    /// Own measurement outcomes of the observer(s) on `register`.
    pub fn measurements_on(&self, register: RegisterId) -> Vec<(PartyId, usize, u8)> {
        self.events
            .iter()
            .filter_map(|e| match e.kind {
                EventKind::Measurement {
                    party,
                    register: r,
                    qubit,
                    bit,
                } if r == register => Some((party, qubit, bit)),
                _ => None,
            })
            .collect()
    }

    pub fn gates_on(&self, register: RegisterId) -> Vec<(PartyId, AppliedGate)> {
        self.events
            .iter()
            .filter_map(|e| match e.kind {
                EventKind::GateApplied {
                    party,
                    register: r,
                    gate,
                    ..
                } if r == register => Some((party, gate)),
                _ => None,
            })
            .collect()
    }

    pub fn verdict(&self) -> Option<AnnouncedVerdict> {
        self.events.iter().rev().find_map(|e| match &e.kind {
            EventKind::MessageSent {
                message: Message::VerdictAnnounce { verdict, .. },
            } => Some(verdict.clone()),
            _ => None,
        })
    }
}
