use std::collections::{BTreeMap, BTreeSet};

use proptest::prelude::*;
use qanon::adversary::{run_attack, AttackSpec, TamperScope};
use qanon::ghz::Backend;
use qanon::netsim::{Observer, PartyId};
use qanon::protocols::{
    run_full_pipeline, run_modified_qan, run_qan, PipelineResult, ProtocolConfig, Scheme,
};

fn backend() -> impl Strategy<Value = Backend> {
    prop_oneof![Just(Backend::Phase), Just(Backend::Dense)]
}

fn all_parties(n: usize) -> Vec<PartyId> {
    (1..=n).map(PartyId::Agent).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn certain_notification_reaches_exactly_the_targets(
        n in 3usize..=7,
        raw in prop::collection::btree_map(1usize..=7, 1usize..=7, 0..7),
        backend in backend(),
        seed in any::<u64>(),
    ) {
        let mut c = ProtocolConfig::new(n).with_backend(backend).with_seed(seed);
        c.k = 1;
        c.p_z = 1.0;
        c.notify_requests = raw.into_iter().filter(|(s, r)| *s <= n && *r <= n).collect();
        // flips from several senders on one register cancel in pairs
        let targets: BTreeSet<usize> = (1..=n)
            .filter(|t| c.notify_requests.values().filter(|r| *r == t).count() % 2 == 1)
            .collect();
        let run = run_qan(&c).unwrap();
        let got: BTreeSet<usize> = run.outcome.notified_set().into_iter().collect();
        prop_assert_eq!(got, targets);
        prop_assert!(run.transcript.check_view_soundness(&all_parties(n)).is_ok());
        prop_assert!(run.transcript.check_conservation().is_ok());
    }

    #[test]
    fn non_targets_are_never_notified(
        n in 3usize..=6,
        target in 1usize..=6,
        k in 1usize..=6,
        p_z in 0.0f64..=1.0,
        seed in any::<u64>(),
    ) {
        let target = (target - 1) % n + 1;
        let mut c = ProtocolConfig::new(n).with_seed(seed);
        c.k = k;
        c.p_z = p_z;
        c.notify_requests = BTreeMap::from([(1, target)]);
        let run = run_qan(&c).unwrap();
        for j in run.outcome.notified_set() {
            prop_assert_eq!(j, target);
        }
    }

    #[test]
    fn modified_notification_is_sound(
        n in 2usize..=6,
        targets in prop::collection::btree_set(1usize..=6, 0..6),
        backend in backend(),
        seed in any::<u64>(),
    ) {
        let mut c = ProtocolConfig::new(n).with_backend(backend).with_seed(seed);
        c.k = 1;
        c.p_z = 1.0;
        c.tp_targets = targets.into_iter().filter(|t| *t <= n).collect();
        let run = run_modified_qan(&c).unwrap();
        let got: BTreeSet<usize> = run.outcome.notified_set().into_iter().collect();
        prop_assert_eq!(got, c.tp_targets.iter().copied().collect::<BTreeSet<_>>());
    }

    #[test]
    fn pipeline_verdict_matches_plain_comparison(
        n in 3usize..=5,
        secrets in prop::collection::vec(prop::collection::vec(0u8..2, 2), 2..=3),
        backend in backend(),
        seed in any::<u64>(),
    ) {
        let mut c = ProtocolConfig::new(n).with_backend(backend).with_seed(seed);
        c.k = 1;
        c.p_z = 1.0;
        c.m = 2;
        c.secrets = secrets
            .iter()
            .enumerate()
            .map(|(i, s)| (i + 1, s.iter().map(|b| char::from(b'0' + b)).collect()))
            .collect();
        let run = run_full_pipeline(&c).unwrap();
        prop_assert_eq!(run.scheme, if secrets.len() == 2 { Scheme::TwoParty } else { Scheme::Multi });
        let PipelineResult::Completed { verdict, .. } = run.result else {
            panic!("honest pipeline aborted");
        };
        for bit in 0..2 {
            let same = secrets.iter().all(|s| s[bit] == secrets[0][bit]);
            prop_assert_eq!(verdict.per_bit[bit].is_equal(), same);
        }
        prop_assert_eq!(verdict.overall.is_equal(), secrets.iter().all(|s| *s == secrets[0]));
    }
}

/// The announced bits of a notification round look like fair coins to an
/// outsider whether or not the announcing agent's register carries a flip.
#[test]
fn announced_bits_are_masked() {
    let trials = 4000u64;
    for request in [None, Some((2usize, 1usize))] {
        let mut ones = [0u64; 3];
        for seed in 0..trials {
            let mut c = ProtocolConfig::new(4).with_seed(seed);
            c.k = 1;
            c.p_z = 1.0;
            c.notify_requests = request.into_iter().collect();
            let run = run_qan(&c).unwrap();
            let view = run.transcript.view(Observer::Eavesdropper);
            // agent 1's register in the only run; agent 1 keeps its own bit
            let bits = view.bits_for(1);
            assert_eq!(bits.len(), 3);
            for (sender, bit) in bits {
                ones[sender.agent_index().unwrap() - 2] += u64::from(bit);
            }
        }
        let sigma = (0.25 / trials as f64).sqrt();
        for (j, count) in ones.iter().enumerate() {
            let rate = *count as f64 / trials as f64;
            assert!(
                (rate - 0.5).abs() <= 3.0 * sigma,
                "request {request:?}, agent {}: rate {rate}",
                j + 2
            );
        }
    }
}

/// Computational-basis interception collapses the register; a test with
/// `h = 0` still passes and one with `h = 1` catches it half the time.
#[test]
fn intercept_detection_follows_three_quarters_law() {
    let trials = 3000;
    for s in [1usize, 3] {
        let mut c = ProtocolConfig::new(4).with_backend(Backend::Dense);
        c.s = s;
        let spec = AttackSpec::InterceptResend {
            fraction: 1.0,
            scope: TamperScope::Sharing,
        };
        let report = run_attack(&spec, &c, trials, 21).unwrap();
        let expected = 1.0 - 0.75f64.powi(s as i32);
        let sigma = (expected * (1.0 - expected) / trials as f64).sqrt();
        let rate = report.detection_rate.unwrap();
        assert!(
            (rate - expected).abs() <= 3.0 * sigma,
            "S={s}: {rate} vs {expected}"
        );
    }
}
