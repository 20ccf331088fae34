use std::f64::consts::PI;

use proptest::prelude::*;
use qanon::ghz::{create_ghz, Backend, DiagonalGate, SimRng};
use rand::SeedableRng;

fn gate() -> impl Strategy<Value = DiagonalGate> {
    prop_oneof![
        Just(DiagonalGate::Identity),
        Just(DiagonalGate::PauliZ),
        (0u32..=7).prop_map(|g| DiagonalGate::PhaseG { g }),
    ]
}

fn circuit() -> impl Strategy<Value = (usize, Vec<(usize, DiagonalGate)>)> {
    (2usize..=8).prop_flat_map(|arity| {
        (
            Just(arity),
            prop::collection::vec((1..=arity, gate()), 0..16),
        )
    })
}

/// Relative phase in radians, written out independently of the engine.
fn oracle_theta(gates: &[(usize, DiagonalGate)]) -> f64 {
    gates
        .iter()
        .map(|(_, g)| match g {
            DiagonalGate::Identity => 0.0,
            DiagonalGate::PauliZ => PI,
            DiagonalGate::PhaseG { g } => PI / 2f64.powi(*g as i32),
        })
        .sum()
}

fn p_even(arity: usize, gates: &[(usize, DiagonalGate)], backend: Backend) -> f64 {
    let mut r = create_ghz(1, arity, backend).unwrap();
    for &(q, g) in gates {
        r.apply_diagonal(q, g).unwrap();
    }
    r.exact_parity_distribution().unwrap().p_even
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn backends_agree_with_cosine_law((arity, gates) in circuit()) {
        let expected = (oracle_theta(&gates) / 2.0).cos().powi(2);
        let phase = p_even(arity, &gates, Backend::Phase);
        let dense = p_even(arity, &gates, Backend::Dense);
        prop_assert!((phase - expected).abs() < 1e-9, "phase {phase} vs {expected}");
        prop_assert!((dense - expected).abs() < 1e-9, "dense {dense} vs {expected}");
    }

    #[test]
    fn gate_order_and_placement_are_irrelevant((arity, gates) in circuit(), shift in 0usize..8) {
        let mut moved: Vec<_> = gates.iter().rev().map(|&(q, g)| ((q + shift) % arity + 1, g)).collect();
        let k = shift.min(moved.len());
        moved.rotate_left(k);
        for backend in [Backend::Phase, Backend::Dense] {
            let a = p_even(arity, &gates, backend);
            let b = p_even(arity, &moved, backend);
            prop_assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn dense_norm_is_preserved((arity, gates) in circuit(), seed in any::<u64>()) {
        let mut r = create_ghz(1, arity, Backend::Dense).unwrap();
        for &(q, g) in &gates {
            r.apply_diagonal(q, g).unwrap();
        }
        r.apply_hadamard(1).unwrap();
        prop_assert!((r.dense_norm().unwrap() - 1.0).abs() < 1e-12);
        let mut rng = SimRng::seed_from_u64(seed);
        r.measure_computational(arity, &mut rng).unwrap();
        prop_assert!((r.dense_norm().unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn parity_of_readout_counts_z_flips(arity in 2usize..=8, flips in prop::collection::vec(1usize..=8, 0..10), seed in any::<u64>()) {
        for backend in [Backend::Phase, Backend::Dense] {
            let mut r = create_ghz(1, arity, backend).unwrap();
            for &q in &flips {
                r.apply_diagonal((q - 1) % arity + 1, DiagonalGate::PauliZ).unwrap();
            }
            let mut rng = SimRng::seed_from_u64(seed);
            let bits = r.hadamard_all_then_measure(&mut rng).unwrap();
            let ones = bits.iter().filter(|b| **b == 1).count();
            prop_assert_eq!(ones % 2, flips.len() % 2);
        }
    }
}

#[test]
fn phase_g_zero_acts_as_pauli_z() {
    for backend in [Backend::Phase, Backend::Dense] {
        for arity in 2..=6 {
            let z = p_even(arity, &[(1, DiagonalGate::PauliZ)], backend);
            let g0 = p_even(arity, &[(1, DiagonalGate::PhaseG { g: 0 })], backend);
            assert_eq!(z, 0.0);
            assert!((z - g0).abs() < 1e-12);
        }
    }
}

#[test]
fn phase_quarter_turn_gives_even_odds() {
    // one π/2 shift: p_even = cos²(π/4)
    for backend in [Backend::Phase, Backend::Dense] {
        let p = p_even(5, &[(3, DiagonalGate::PhaseG { g: 1 })], backend);
        assert!((p - 0.5).abs() < 1e-12);
    }
}

#[test]
fn dense_cap_is_enforced() {
    assert!(create_ghz(1, 16, Backend::Dense).is_ok());
    assert!(create_ghz(1, 17, Backend::Dense).is_err());
    assert!(create_ghz(1, 64, Backend::Phase).is_ok());
}
