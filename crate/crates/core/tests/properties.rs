mod common;

use std::f64::consts::PI;

use nmrqsim::circuit::{build_fid_circuit, Gate, ProductFormula};
use nmrqsim::simulator::{sample_counts, sample_mx};
use nmrqsim::{coupling_graph, decompose_clusters, parse_spin_system, SpinSystem, StateVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn system_strategy() -> impl Strategy<Value = SpinSystem> {
    (1usize..9).prop_flat_map(|n| {
        let offsets = prop::collection::vec(0.0..4000.0f64, n);
        let pairs = n * (n - 1) / 2;
        // zero-weighted entries leave the pair uncoupled
        let js = prop::collection::vec(prop_oneof![Just(0.0), -20.0..20.0f64], pairs);
        (offsets, js).prop_map(move |(offsets, js)| {
            let mut couplings = Vec::new();
            let mut it = js.into_iter();
            for k in 0..n {
                for l in k + 1..n {
                    couplings.push((k, l, it.next().unwrap()));
                }
            }
            SpinSystem::from_offsets_hz("p", &offsets, &couplings).unwrap()
        })
    })
}

proptest! {
    #[test]
    fn clusters_partition_the_spins(sys in system_strategy(), thr in 0.0..25.0f64) {
        let clusters = decompose_clusters(&sys, thr);
        let mut seen: Vec<usize> = clusters.iter().flat_map(|c| c.members.clone()).collect();
        seen.sort();
        prop_assert_eq!(seen, (0..sys.n_spins()).collect::<Vec<_>>());
        for c in &clusters {
            prop_assert_eq!(c.system.n_spins(), c.len());
            // no retained coupling crosses a cluster boundary
            for &(k, l) in coupling_graph(&sys, thr).edges() {
                prop_assert_eq!(c.members.contains(&k), c.members.contains(&l));
            }
        }
    }

    #[test]
    fn raising_the_threshold_never_merges_clusters(sys in system_strategy(), a in 0.0..25.0f64, b in 0.0..25.0f64) {
        let (lo, hi) = (a.min(b), a.max(b));
        prop_assert!(decompose_clusters(&sys, lo).len() <= decompose_clusters(&sys, hi).len());
        prop_assert_eq!(decompose_clusters(&sys, 1e9).len(), sys.n_spins());
    }

    #[test]
    fn edge_count_equals_half_the_offdiagonal_support(sys in system_strategy(), thr in 0.0..25.0f64) {
        let j = sys.j_matrix();
        let n = sys.n_spins();
        let support = (0..n).flat_map(|k| (0..n).map(move |l| (k, l)))
            .filter(|&(k, l)| k != l && j[(k, l)].abs() > thr)
            .count();
        let graph = coupling_graph(&sys, thr);
        prop_assert_eq!(graph.edge_count() * 2, support);
        prop_assert_eq!(graph.edge_count(), sys.couplings(thr).len());
    }

    #[test]
    fn json_round_trip(sys in system_strategy()) {
        let back = parse_spin_system(&sys.to_json_string()).unwrap();
        prop_assert_eq!(back, sys);
    }

    #[test]
    fn fid_circuits_preserve_the_norm(sys in system_strategy(), t in 0.0..0.5f64, reps in 1usize..4) {
        let c = build_fid_circuit(&sys, t, reps, ProductFormula::LieTrotter).unwrap();
        let mut psi = StateVector::zero(sys.n_spins());
        psi.apply_circuit(&c).unwrap();
        prop_assert!((psi.norm() - 1.0).abs() < 1e-10);
    }
}

#[test]
fn thousand_random_gates_keep_ten_qubits_normalized() {
    let n = 10;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut psi = StateVector::plus(n);
    for _ in 0..1000 {
        let a = rng.gen_range(0..n);
        let b = (a + rng.gen_range(1..n)) % n;
        let th = rng.gen_range(-PI..PI);
        let g = match rng.gen_range(0..10) {
            0 => Gate::rx(a, th),
            1 => Gate::ry(a, th),
            2 => Gate::rz(a, th),
            3 => Gate::h(a),
            4 => Gate::sx(a),
            5 => Gate::rxx(a, b, th),
            6 => Gate::ryy(a, b, th),
            7 => Gate::rzz(a, b, th),
            8 => Gate::cx(a, b),
            _ => Gate::ecr(a, b),
        };
        psi.apply_gate(&g);
    }
    assert!((psi.norm() - 1.0).abs() < 1e-10);
}

#[test]
fn sampled_counts_follow_born_probabilities() {
    let sys = SpinSystem::from_offsets_hz("abc", &[310.0, 900.0, 1450.0], &[(0, 1, 11.0), (1, 2, 6.0)]).unwrap();
    let c = build_fid_circuit(&sys, 0.0173, 1, ProductFormula::LieTrotter).unwrap();
    let mut psi = StateVector::zero(3);
    psi.apply_circuit(&c).unwrap();
    let p = psi.probabilities();
    let shots = 100_000;
    let counts = sample_counts(&psi, shots, &mut ChaCha8Rng::seed_from_u64(99));
    let chi2: f64 = (0..8)
        .filter(|&i| p[i] > 1e-12)
        .map(|i| {
            let expected = p[i] * shots as f64;
            let observed = *counts.get(&i).unwrap_or(&0) as f64;
            (observed - expected).powi(2) / expected
        })
        .sum();
    // 7 degrees of freedom, p = 0.001
    assert!(chi2 < 24.32, "chi2 = {chi2}");
}

#[test]
fn sampling_rejects_circuits_without_measurement() {
    let c = build_fid_circuit(&SpinSystem::from_offsets_hz("a", &[5.0], &[]).unwrap(), 0.1, 1, ProductFormula::LieTrotter)
        .unwrap()
        .without_measurements();
    assert!(sample_mx(&c, &StateVector::zero(1), 10, 0).is_err());
}
