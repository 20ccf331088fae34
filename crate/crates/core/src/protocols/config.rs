use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::ProtocolError;
use crate::ghz::Backend;
use crate::netsim::PartyId;

/// How the designated preparer builds the registers it distributes.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PreparerBehavior {
    #[default]
    Honest,
    /// Sends `|0…0⟩` instead of a GHZ state.
    ProductState,
}

/// Every parameter of a protocol run. Field names in the serialized form
/// follow the protocol notation (`K`, `L`, `S`, `M`, `P_Z`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolConfig {
    /// Number of agents.
    pub n: usize,
    /// Notification repetitions.
    #[serde(rename = "K", default = "default_repetitions")]
    pub k: usize,
    /// GHZ states retained by resource sharing.
    #[serde(rename = "L", default = "default_retained")]
    pub l: usize,
    /// Security parameter: number of sacrificed, tested GHZ states.
    #[serde(rename = "S", default)]
    pub s: usize,
    /// Secret bit-length. `0` means "infer from `secrets`".
    #[serde(rename = "M", default)]
    pub m: usize,
    #[serde(rename = "P_Z", default = "default_pz")]
    pub p_z: f64,
    /// Sender → intended receiver, for anonymous notification.
    #[serde(default)]
    pub notify_requests: BTreeMap<usize, usize>,
    /// Agents the third party notifies in the receiver-anonymous variant.
    #[serde(default)]
    pub tp_targets: BTreeSet<usize>,
    /// Competing agent → secret bitstring such as `"0110"`.
    #[serde(default)]
    pub secrets: BTreeMap<usize, String>,
    #[serde(default)]
    pub backend: Backend,
    #[serde(default)]
    pub seed: u64,
    /// Designated preparer for resource sharing; drawn at random when absent.
    #[serde(default)]
    pub preparer: Option<usize>,
    #[serde(default)]
    pub preparer_behavior: PreparerBehavior,
    /// Agents that withhold their security-check announcements.
    #[serde(default)]
    pub refusing_parties: BTreeSet<usize>,
}

fn default_repetitions() -> usize {
    1
}

fn default_retained() -> usize {
    1
}

fn default_pz() -> f64 {
    1.0
}

impl ProtocolConfig {
    pub fn new(n: usize) -> Self {
        ProtocolConfig {
            n,
            k: 1,
            l: 1,
            s: 0,
            m: 0,
            p_z: 1.0,
            notify_requests: BTreeMap::new(),
            tp_targets: BTreeSet::new(),
            secrets: BTreeMap::new(),
            backend: Backend::Phase,
            seed: 0,
            preparer: None,
            preparer_behavior: PreparerBehavior::Honest,
            refusing_parties: BTreeSet::new(),
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_backend(mut self, backend: Backend) -> Self {
        self.backend = backend;
        self
    }

    pub fn with_secrets<'a>(mut self, secrets: impl IntoIterator<Item = (usize, &'a str)>) -> Self {
        self.secrets = secrets
            .into_iter()
            .map(|(i, s)| (i, s.to_string()))
            .collect();
        self
    }

    pub(crate) fn check_common(&self) -> Result<(), ProtocolError> {
        if self.n < 2 {
            return Err(ProtocolError::Config(format!(
                "need at least 2 agents, got {}",
                self.n
            )));
        }
        if !(0.0..=1.0).contains(&self.p_z) {
            return Err(ProtocolError::Config(format!(
                "P_Z = {} outside [0, 1]",
                self.p_z
            )));
        }
        if self.k < 1 {
            return Err(ProtocolError::Config("K must be at least 1".into()));
        }
        let agent = |i: &usize| (1..=self.n).contains(i);
        for (s, r) in &self.notify_requests {
            if !agent(s) || !agent(r) {
                return Err(ProtocolError::Config(format!(
                    "notify request {s} -> {r} names an unknown agent"
                )));
            }
        }
        if let Some(t) = self.tp_targets.iter().find(|t| !agent(t)) {
            return Err(ProtocolError::Config(format!(
                "TP target {t} is not an agent"
            )));
        }
        if let Some(t) = self.secrets.keys().find(|t| !agent(t)) {
            return Err(ProtocolError::Config(format!(
                "secret holder {t} is not an agent"
            )));
        }
        if let Some(p) = self.preparer.filter(|p| !agent(p)) {
            return Err(ProtocolError::Config(format!(
                "preparer {p} is not an agent"
            )));
        }
        Ok(())
    }

    /// Parsed secrets, all of the same length `M`.
    pub fn parsed_secrets(&self) -> Result<(usize, BTreeMap<PartyId, Vec<u8>>), ProtocolError> {
        let mut out = BTreeMap::new();
        let mut len = None;
        for (holder, text) in &self.secrets {
            let bits = text
                .chars()
                .map(|c| match c {
                    '0' => Ok(0u8),
                    '1' => Ok(1u8),
                    other => Err(ProtocolError::Config(format!(
                        "secret of agent {holder} has non-bit character `{other}`"
                    ))),
                })
                .collect::<Result<Vec<u8>, _>>()?;
            if bits.is_empty() {
                return Err(ProtocolError::Config(format!(
                    "secret of agent {holder} is empty"
                )));
            }
            match len {
                None => len = Some(bits.len()),
                Some(l) if l != bits.len() => {
                    return Err(ProtocolError::Config(
                        "all secrets must have the same length M".into(),
                    ))
                }
                _ => {}
            }
            out.insert(PartyId::Agent(*holder), bits);
        }
        let m = len.unwrap_or(0);
        if self.m != 0 && len.is_some() && self.m != m {
            return Err(ProtocolError::Config(format!(
                "M = {} but secrets have length {m}",
                self.m
            )));
        }
        Ok((m, out))
    }
}
