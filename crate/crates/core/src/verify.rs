//! Exhaustive small-instance checks behind `qanon verify`.
//!
//! The `_with` variants take a mutation hook so tests can confirm that each
//! check actually fails when the property it guards is broken.

use rand::Rng;
use serde::Serialize;

use crate::adversary::{coalition_trial, tp_trace_posterior, Objective, Reveal};
use crate::ghz::{create_ghz, Backend, DiagonalGate};
use crate::netsim::{AppliedGate, EventKind};
use crate::protocols::{
    ceil_log2, run_aqpc_multi, run_comparison, run_qan, ProtocolConfig, Scheme, SlotParity,
};
use crate::seed::{derive_run_seed, stream_rng, Role, StageStream};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub cases: u64,
    /// First failing case, if any.
    pub failure: Option<String>,
}

struct Tally {
    name: &'static str,
    cases: u64,
    failure: Option<String>,
}

impl Tally {
    fn new(name: &'static str) -> Self {
        Tally {
            name,
            cases: 0,
            failure: None,
        }
    }

    fn record(&mut self, ok: bool, case: impl FnOnce() -> String) {
        self.cases += 1;
        if !ok && self.failure.is_none() {
            self.failure = Some(case());
        }
    }

    fn error(&mut self, e: impl std::fmt::Display) {
        self.record(false, || format!("error: {e}"));
    }

    fn finish(self) -> CheckResult {
        CheckResult {
            name: self.name.to_string(),
            passed: self.failure.is_none() && self.cases > 0,
            cases: self.cases,
            failure: self.failure,
        }
    }
}

fn random_gate(rng: &mut crate::ghz::SimRng) -> DiagonalGate {
    match rng.random_range(0..3) {
        0 => DiagonalGate::Identity,
        1 => DiagonalGate::PauliZ,
        _ => DiagonalGate::PhaseG {
            g: rng.random_range(0..=6),
        },
    }
}

/// Random diagonal circuits on both backends must give the same exact
/// parity distribution.
pub fn backend_equivalence(cases: u64, seed: u64) -> CheckResult {
    backend_equivalence_with(cases, seed, |g| g)
}

/// As [`backend_equivalence`], with `mutate` applied to every gate the
/// phase backend sees.
pub fn backend_equivalence_with(
    cases: u64,
    seed: u64,
    mutate: impl Fn(DiagonalGate) -> DiagonalGate,
) -> CheckResult {
    let mut t = Tally::new("backend_equivalence");
    let mut rng = stream_rng(seed, StageStream::Game, Role::Public);
    for case in 0..cases {
        let arity = rng.random_range(2..=8);
        let gates: Vec<(usize, DiagonalGate)> = (0..rng.random_range(0..=12))
            .map(|_| (rng.random_range(1..=arity), random_gate(&mut rng)))
            .collect();
        let result = (|| {
            let mut phase = create_ghz(0, arity, Backend::Phase)?;
            let mut dense = create_ghz(0, arity, Backend::Dense)?;
            for &(q, g) in &gates {
                phase.apply_diagonal(q, mutate(g))?;
                dense.apply_diagonal(q, g)?;
            }
            Ok::<_, crate::ghz::EngineError>(
                phase
                    .exact_parity_distribution()?
                    .max_abs_diff(&dense.exact_parity_distribution()?),
            )
        })();
        match result {
            Ok(diff) => t.record(diff <= 1e-9, || {
                format!("case {case}: arity {arity}, gates {gates:?}, difference {diff:e}")
            }),
            Err(e) => t.error(e),
        }
    }
    t.finish()
}

/// Two-party comparison: Equal ⇔ `b1 = b2` for every `(b1, b2, k)`, every
/// `n` in `ns`, both backends, `seeds` seeds each.
pub fn aqpc_two_truth_table(ns: &[usize], seeds: u64) -> CheckResult {
    let mut t = Tally::new("aqpc_two_truth_table");
    for &n in ns {
        for backend in [Backend::Phase, Backend::Dense] {
            for b1 in 0..2u8 {
                for b2 in 0..2u8 {
                    for k in 0..2u8 {
                        for seed in 0..seeds {
                            let c = ProtocolConfig::new(n)
                                .with_backend(backend)
                                .with_seed(seed)
                                .with_secrets([(1, &*b1.to_string()), (n, &*b2.to_string())]);
                            match run_comparison(&c, Scheme::TwoParty, Some(&[k])) {
                                Ok(r) => t.record(
                                    r.outcome.verdict.overall.is_equal() == (b1 == b2),
                                    || format!("n={n} {backend} b1={b1} b2={b2} k={k} seed={seed}"),
                                ),
                                Err(e) => t.error(e),
                            }
                        }
                    }
                }
            }
        }
    }
    t.finish()
}

/// Multi-party comparison over every secret vector for `p` competitors.
pub fn aqpc_multi_enumeration(n: usize, ps: &[usize], seeds: u64) -> CheckResult {
    aqpc_multi_enumeration_with(n, ps, seeds, crate::protocols::bit_equal)
}

/// As [`aqpc_multi_enumeration`], deciding each bit with `rule` applied to
/// the third party's parities.
pub fn aqpc_multi_enumeration_with(
    n: usize,
    ps: &[usize],
    seeds: u64,
    rule: impl Fn(&[SlotParity]) -> bool,
) -> CheckResult {
    let mut t = Tally::new("aqpc_multi_enumeration");
    for &p in ps {
        for vector in 0..1u32 << p {
            let bits: Vec<u8> = (0..p).map(|i| (vector >> i & 1) as u8).collect();
            let all_same = bits.iter().all(|b| *b == bits[0]);
            for seed in 0..seeds {
                let mut c = ProtocolConfig::new(n).with_seed(derive_run_seed(seed, vector as u64));
                c.secrets = bits
                    .iter()
                    .enumerate()
                    .map(|(i, b)| (i + 1, b.to_string()))
                    .collect();
                match run_aqpc_multi(&c) {
                    Ok(r) => t.record(rule(&r.outcome.parities[0]) == all_same, || {
                        format!(
                            "n={n} secrets={bits:?} seed={seed} parities={:?}",
                            r.outcome.parities[0]
                        )
                    }),
                    Err(e) => t.error(e),
                }
            }
        }
    }
    t.finish()
}

/// With `t` of at most `n` encoders on a branch, some `g ≤ ⌈log2 n⌉` gives
/// relative phase `t·π/2^g ≡ π`, so `D = 1` with certainty.
pub fn multi_divisibility(max_n: usize) -> CheckResult {
    let mut tally = Tally::new("aqpc_multi_divisibility");
    for n in 2..=max_n {
        let levels = ceil_log2(n);
        for t in 1..=n {
            let witness = (0..=levels).find(|&g| {
                let mut reg = match create_ghz(0, n + 1, Backend::Phase) {
                    Ok(r) => r,
                    Err(_) => return false,
                };
                (1..=t).all(|q| reg.apply_diagonal(q, DiagonalGate::PhaseG { g }).is_ok())
                    && reg
                        .exact_parity_distribution()
                        .is_ok_and(|d| d.p_odd == 1.0)
            });
            tally.record(witness.is_some(), || {
                format!("n={n} t={t}: no deterministic D = 1")
            });
        }
    }
    tally.finish()
}

/// Anonymous notification: the parity each agent computes equals the number
/// of Z flips on its register, every run.
pub fn qan_parity_identity(ns: &[usize], seeds: u64) -> CheckResult {
    let mut t = Tally::new("qan_parity_identity");
    for &n in ns {
        for seed in 0..seeds {
            let mut rng = stream_rng(seed, StageStream::Game, Role::Public);
            let mut c = ProtocolConfig::new(n).with_seed(seed);
            c.k = 3;
            c.p_z = 0.5;
            c.notify_requests = (1..=n)
                .filter(|_| rng.random_bool(0.5))
                .collect::<Vec<_>>()
                .into_iter()
                .map(|s| (s, rng.random_range(1..=n)))
                .collect();
            let run = match run_qan(&c) {
                Ok(r) => r,
                Err(e) => {
                    t.error(e);
                    continue;
                }
            };
            for (rn, parities) in run.outcome.per_run_parities.iter().enumerate() {
                for (j, parity) in parities.iter().enumerate() {
                    let reg = (rn * n + j + 1) as u64;
                    let flips = run.transcript.count(|k| {
                        matches!(k, EventKind::GateApplied { register, gate: AppliedGate::PauliZ, .. } if *register == reg)
                    });
                    t.record(usize::from(*parity) == flips % 2, || {
                        format!("n={n} seed={seed} run={rn} register={reg}")
                    });
                }
            }
        }
    }
    t.finish()
}

/// Exact posteriors of every coalition of size `1..=n-2` are uniform.
pub fn coalition_flatness(ns: &[usize], seeds: u64) -> CheckResult {
    let mut t = Tally::new("coalition_posterior_flatness");
    for &n in ns {
        for c in 1..=n.saturating_sub(2) {
            let members = (1..=c).collect();
            for objective in [Objective::IdentifyNotifier, Objective::IdentifyNotified] {
                for seed in 0..seeds {
                    let cfg = ProtocolConfig::new(n);
                    match coalition_trial(&cfg, &members, objective, Reveal::default(), seed) {
                        Ok(trial) => t.record(trial.deviation < 1e-9, || {
                            format!(
                                "n={n} c={c} {objective:?} seed={seed} deviation={:e}",
                                trial.deviation
                            )
                        }),
                        Err(e) => t.error(e),
                    }
                }
            }
        }
    }
    t.finish()
}

/// The third party's posterior over the phase-introducing competitor is
/// (1/2, 1/2) for every `b1` and `k`.
pub fn traceless_flatness(ns: &[usize]) -> CheckResult {
    let mut t = Tally::new("traceless_posterior_flatness");
    for &n in ns {
        for b1 in 0..2u8 {
            for k in 0..2u8 {
                match tp_trace_posterior(&ProtocolConfig::new(n), b1, Some(k), false) {
                    Ok((post, _)) => t
                        .record(post.values().all(|p| (p - 0.5).abs() < 1e-12), || {
                            format!("n={n} b1={b1} k={k} posterior={post:?}")
                        }),
                    Err(e) => t.error(e),
                }
            }
        }
    }
    t.finish()
}

/// The full suite run by `qanon verify`.
pub fn run_all(seed: u64) -> Vec<CheckResult> {
    vec![
        backend_equivalence(1000, seed),
        multi_divisibility(16),
        qan_parity_identity(&[3, 4, 5, 6], 20),
        aqpc_two_truth_table(&[3, 4, 5, 6], 3),
        aqpc_multi_enumeration(5, &[2, 3, 4], 10),
        coalition_flatness(&[4, 5, 6], 5),
        traceless_flatness(&[3, 4, 5, 6]),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn checks_pass() {
        assert!(backend_equivalence(200, 1).passed);
        assert!(multi_divisibility(12).passed);
        assert!(aqpc_multi_enumeration(4, &[3], 2).passed);
        assert!(traceless_flatness(&[3]).passed);
    }

    #[test]
    fn exponent_mutation_breaks_equivalence() {
        let r = backend_equivalence_with(200, 1, |g| match g {
            DiagonalGate::PhaseG { g } => DiagonalGate::PhaseG { g: g + 1 },
            other => other,
        });
        assert!(!r.passed);
        assert!(r.failure.is_some());
    }

    #[test]
    fn single_branch_rule_is_caught() {
        let r = aqpc_multi_enumeration_with(5, &[2, 3], 10, |ps| {
            ps.iter().filter(|p| p.branch == 0).all(|p| p.d == 0)
        });
        assert!(!r.passed);
    }
}
