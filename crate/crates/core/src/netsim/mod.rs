//! Parties, authenticated classical channels, a tamper-able quantum channel,
//! a deterministic round scheduler and the transcript every run produces.

mod network;
mod transcript;

pub use network::{Assignment, ChannelTap, Ctx, Network, PartyMachine, RunStatus, Transit};
pub use transcript::{
    AbortReason, AnnouncedVerdict, AppliedGate, Endpoint, Event, EventKind, EventRecord, Message,
    Observer, PartyView, Transcript,
};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ghz::{EngineError, RegisterId};

/// A protocol participant. Agents are numbered `1..=n`; the third party, when
/// present, holds qubit `n + 1` of every register it shares.
///
/// Ordering puts every agent before the third party, which is the in-round
/// tie-break used by the scheduler.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum PartyId {
    Agent(usize),
    ThirdParty,
}

impl PartyId {
    pub fn agent_index(self) -> Option<usize> {
        match self {
            PartyId::Agent(i) => Some(i),
            PartyId::ThirdParty => None,
        }
    }

    /// Qubit index this party holds on a register of the given arity.
    pub fn qubit_on(self, agents: usize) -> usize {
        match self {
            PartyId::Agent(i) => i,
            PartyId::ThirdParty => agents + 1,
        }
    }
}

impl fmt::Display for PartyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PartyId::Agent(i) => write!(f, "A{i}"),
            PartyId::ThirdParty => f.write_str("TP"),
        }
    }
}

impl From<PartyId> for String {
    fn from(p: PartyId) -> String {
        p.to_string()
    }
}

impl FromStr for PartyId {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "TP" {
            return Ok(PartyId::ThirdParty);
        }
        s.strip_prefix('A')
            .and_then(|i| i.parse().ok())
            .filter(|i| *i >= 1)
            .map(PartyId::Agent)
            .ok_or_else(|| format!("bad party id `{s}`"))
    }
}

impl TryFrom<String> for PartyId {
    type Error = String;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NetError {
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("assignment leaves qubit {qubit} of register {register} undealt")]
    IncompleteAssignment { register: RegisterId, qubit: usize },
    #[error("qubit {qubit} of register {register} assigned more than once")]
    DuplicateAssignment { register: RegisterId, qubit: usize },
    #[error("unknown register {0}")]
    UnknownRegister(RegisterId),
    #[error("unknown party {0}")]
    UnknownParty(PartyId),
    #[error("{0} cannot send a directed message to itself")]
    SelfSend(PartyId),
    #[error("{party} holds no qubit of register {register}")]
    NotOwner {
        party: PartyId,
        register: RegisterId,
    },
    #[error("{party} has no measurement outcome for register {register}")]
    NoOutcome {
        party: PartyId,
        register: RegisterId,
    },
    #[error("party {0} appears twice in the scheduler")]
    DuplicateParty(PartyId),
    #[error("{party} failed in round {round}: {message}")]
    PartyFailed {
        party: PartyId,
        round: u64,
        message: String,
    },
}
