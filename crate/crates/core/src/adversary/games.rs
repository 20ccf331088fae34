//! Passive inference games played over legitimate views.

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::posterior::{
    map_guess, posterior, uniform_deviation, Evidence, Hypothesis, LikelihoodOracle,
};
use super::AdversaryError;
use crate::ghz::{DiagonalGate, RegisterId};
use crate::netsim::{Observer, PartyId};
use crate::protocols::{run_comparison, run_qan, ProtocolConfig, Scheme};
use crate::seed::{stream_rng, Role, StageStream};

/// Largest `K` for which coalition games enumerate every coin pattern.
pub const MAX_GAME_REPETITIONS: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    /// Who sent the notification (the receiver is a coalition member).
    IdentifyNotifier,
    /// Who was notified (by some non-member).
    IdentifyNotified,
    /// The first competitor's bit in a two-party comparison.
    RecoverSecret,
}

/// Ablations handing the adversary a normally hidden variable.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Reveal {
    /// Every party's gate choices.
    #[serde(default)]
    pub gates: bool,
    /// The masking bits `k`.
    #[serde(default)]
    pub k: bool,
}

/// Result of one game trial.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GameTrial {
    pub success: bool,
    /// Distance of the exact posterior from uniform over the candidates.
    pub deviation: f64,
    pub candidates: usize,
}

fn qan_register(run: usize, target: usize, n: usize) -> RegisterId {
    // registers are numbered from 1 in creation order, n per repetition
    (run * n + target) as RegisterId
}

fn coin_patterns(k: usize, p_z: f64) -> Vec<(Vec<bool>, f64)> {
    (0..1usize << k)
        .map(|mask| {
            let coins: Vec<bool> = (0..k).map(|t| mask >> t & 1 == 1).collect();
            let w = coins
                .iter()
                .map(|&c| if c { p_z } else { 1.0 - p_z })
                .product();
            (coins, w)
        })
        .filter(|(_, w)| *w > 0.0)
        .collect()
}

fn check_members(n: usize, members: &BTreeSet<usize>) -> Result<Vec<usize>, AdversaryError> {
    if members.is_empty() {
        return Err(AdversaryError::IllPosed("the coalition is empty".into()));
    }
    if let Some(m) = members.iter().find(|m| !(1..=n).contains(*m)) {
        return Err(AdversaryError::IllPosed(format!(
            "coalition member {m} is not an agent"
        )));
    }
    let outside: Vec<usize> = (1..=n).filter(|i| !members.contains(i)).collect();
    if outside.is_empty() {
        return Err(AdversaryError::IllPosed(
            "the coalition contains every agent, no candidate remains".into(),
        ));
    }
    Ok(outside)
}

fn competitors(config: &ProtocolConfig) -> Result<(usize, usize), AdversaryError> {
    let keys: Vec<usize> = config.secrets.keys().copied().collect();
    match keys.as_slice() {
        [] => Ok((1, 2)),
        [a, b] => Ok((*a, *b)),
        _ => Err(AdversaryError::Config(
            "comparison games need exactly 2 secret holders (or none for agents 1 and 2)".into(),
        )),
    }
}

/// One coalition game trial against anonymous notification or two-party
/// comparison, with seed `seed`.
pub fn coalition_trial(
    config: &ProtocolConfig,
    members: &BTreeSet<usize>,
    objective: Objective,
    reveal: Reveal,
    seed: u64,
) -> Result<GameTrial, AdversaryError> {
    let n = config.n;
    let outside = check_members(n, members)?;
    let mut nature = stream_rng(seed, StageStream::Game, Role::Nature);
    let mut adversary = stream_rng(seed, StageStream::Game, Role::Adversary);
    let coalition: BTreeSet<PartyId> = members.iter().map(|&i| PartyId::Agent(i)).collect();
    let everyone: Vec<PartyId> = (1..=n)
        .map(PartyId::Agent)
        .chain([PartyId::ThirdParty])
        .collect();
    let mut oracle = LikelihoodOracle::default();

    if objective == Objective::RecoverSecret {
        let (a, b) = competitors(config)?;
        if members.contains(&a) || members.contains(&b) {
            return Err(AdversaryError::IllPosed(
                "a competitor cannot be in the coalition".into(),
            ));
        }
        let bits = [
            u8::from(nature.random_bool(0.5)),
            u8::from(nature.random_bool(0.5)),
        ];
        let mut cfg = config.clone();
        cfg.seed = seed;
        cfg.m = 0;
        cfg.secrets = [(a, bits[0].to_string()), (b, bits[1].to_string())].into();
        let report = run_comparison(&cfg, Scheme::TwoParty, None)?;
        let g = report.outcome.layouts[0].slots[0].register;
        let mut ev =
            Evidence::from_view(&report.transcript.view(Observer::Coalition(coalition)), n);
        if reveal.gates {
            ev = ev.reveal_all_gates(&report.transcript, &everyone);
        }
        if reveal.k {
            ev = ev.reveal_k(report.outcome.k.clone());
        }
        let mut hyps = Vec::new();
        for ba in 0..2u8 {
            for bb in 0..2u8 {
                for k in 0..2u8 {
                    let mut h = Hypothesis::new(ba, 0.125);
                    for (p, bit) in [(a, ba), (b, bb)] {
                        if bit ^ k == 1 {
                            h.gates.push((PartyId::Agent(p), g, DiagonalGate::PauliZ));
                        }
                    }
                    h.verdict = Some(vec![ba == bb]);
                    h.k = Some(vec![k]);
                    hyps.push(h);
                }
            }
        }
        let post = posterior(&ev, &BTreeMap::from([(g, n + 1)]), &hyps, &mut oracle)?;
        let guess = map_guess(&post, &mut adversary);
        return Ok(GameTrial {
            success: guess == Some(bits[0]),
            deviation: uniform_deviation(&post),
            candidates: 2,
        });
    }

    if config.k > MAX_GAME_REPETITIONS {
        return Err(AdversaryError::Config(format!(
            "coalition games enumerate coin patterns; K must be at most {MAX_GAME_REPETITIONS}"
        )));
    }
    let pick = |rng: &mut crate::ghz::SimRng| outside[rng.random_range(0..outside.len())];
    let (sender, receiver) = match objective {
        Objective::IdentifyNotifier => (pick(&mut nature), *members.iter().next().unwrap()),
        _ => {
            let s = pick(&mut nature);
            (s, pick(&mut nature))
        }
    };
    let truth = if objective == Objective::IdentifyNotifier {
        sender
    } else {
        receiver
    };
    let mut cfg = config.clone();
    cfg.seed = seed;
    cfg.notify_requests = [(sender, receiver)].into();
    let run = run_qan(&cfg)?;
    let mut ev = Evidence::from_view(&run.transcript.view(Observer::Coalition(coalition)), n);
    if reveal.gates {
        ev = ev.reveal_all_gates(&run.transcript, &everyone);
    }

    let readout: BTreeMap<RegisterId, usize> = (0..cfg.k)
        .flat_map(|t| (1..=n).map(move |j| (qan_register(t, j, n), n)))
        .collect();
    let pairs: Vec<(usize, usize, usize)> = match objective {
        Objective::IdentifyNotifier => outside.iter().map(|&s| (s, s, receiver)).collect(),
        _ => outside
            .iter()
            .flat_map(|&r| outside.iter().map(move |&s| (r, s, r)))
            .collect(),
    };
    let pair_prior = 1.0 / pairs.len() as f64;
    let mut hyps = Vec::new();
    for &(label, s, r) in &pairs {
        for (coins, w) in coin_patterns(cfg.k, cfg.p_z) {
            let mut h = Hypothesis::new(label, pair_prior * w);
            for (t, _) in coins.iter().enumerate().filter(|(_, c)| **c) {
                h.gates.push((
                    PartyId::Agent(s),
                    qan_register(t, r, n),
                    DiagonalGate::PauliZ,
                ));
            }
            hyps.push(h);
        }
    }
    let post = posterior(&ev, &readout, &hyps, &mut oracle)?;
    let guess = map_guess(&post, &mut adversary);
    Ok(GameTrial {
        success: guess == Some(truth),
        deviation: uniform_deviation(&post),
        candidates: outside.len(),
    })
}

/// Exact posterior of the third party over which competitor applied Pauli
/// Z, for a two-party comparison with `b1 ≠ b2` and masking bit `k`.
///
/// The third party is granted both secrets as side information; without
/// `k` the two explanations remain equally likely.
pub fn tp_trace_posterior(
    config: &ProtocolConfig,
    b1: u8,
    fixed_k: Option<u8>,
    reveal_k: bool,
) -> Result<(BTreeMap<PartyId, f64>, PartyId), AdversaryError> {
    let n = config.n;
    let (a, b) = competitors(config)?;
    let mut cfg = config.clone();
    cfg.m = 0;
    cfg.secrets = [(a, b1.to_string()), (b, (1 - b1).to_string())].into();
    let k_vec = fixed_k.map(|k| vec![k]);
    let report = run_comparison(&cfg, Scheme::TwoParty, k_vec.as_deref())?;
    let k = report.outcome.k[0];
    let truth = if b1 ^ k == 1 {
        PartyId::Agent(a)
    } else {
        PartyId::Agent(b)
    };
    let g = report.outcome.layouts[0].slots[0].register;
    let mut ev = Evidence::from_view(
        &report.transcript.view(Observer::Party(PartyId::ThirdParty)),
        n,
    );
    if reveal_k {
        ev = ev.reveal_k(report.outcome.k.clone());
    }
    let hyps: Vec<Hypothesis<PartyId>> = [(a, b1), (b, 1 - b1)]
        .into_iter()
        .map(|(p, bit)| {
            let mut h = Hypothesis::new(PartyId::Agent(p), 0.5);
            h.gates.push((PartyId::Agent(p), g, DiagonalGate::PauliZ));
            h.k = Some(vec![bit ^ 1]);
            h.verdict = Some(vec![false]);
            h
        })
        .collect();
    let post = posterior(
        &ev,
        &BTreeMap::from([(g, n + 1)]),
        &hyps,
        &mut LikelihoodOracle::default(),
    )?;
    Ok((post, truth))
}

/// One trace game trial: uniform `b1`, `b2 = ¬b1`, `k` from the protocol.
pub fn tp_trace_trial(
    config: &ProtocolConfig,
    reveal_k: bool,
    seed: u64,
) -> Result<GameTrial, AdversaryError> {
    let mut nature = stream_rng(seed, StageStream::Game, Role::Nature);
    let mut adversary = stream_rng(seed, StageStream::Game, Role::Adversary);
    let b1 = u8::from(nature.random_bool(0.5));
    let mut cfg = config.clone();
    cfg.seed = seed;
    let (post, truth) = tp_trace_posterior(&cfg, b1, None, reveal_k)?;
    Ok(GameTrial {
        success: map_guess(&post, &mut adversary) == Some(truth),
        deviation: uniform_deviation(&post),
        candidates: 2,
    })
}
