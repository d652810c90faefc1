mod common;

use std::f64::consts::PI;

use common::*;
use nmrqsim::circuit::{build_fid_circuit, decompose_to_native, GateKind, NativeBasis, ProductFormula};
use nmrqsim::hamiltonian::{build_terms, realize_dense, total_z_commutator_norm};
use nmrqsim::spectro::{acquire_fid, AcquisitionConfig, Engine};
use nmrqsim::{decompose_clusters, SpinSystem, StateVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn short_grid(n_points: usize) -> AcquisitionConfig {
    AcquisitionConfig { n_points, ..AcquisitionConfig::default() }
}

fn rms_fid_error(sys: &SpinSystem, cfg: &AcquisitionConfig) -> f64 {
    let exact = acquire_fid(sys, cfg, Engine::ExactOracle).unwrap();
    let approx = acquire_fid(sys, cfg, Engine::TrotterCircuit).unwrap();
    let sq: f64 = exact.mx.iter().zip(&approx.mx).map(|(a, b)| (a - b).powi(2)).sum();
    (sq / exact.len() as f64).sqrt()
}

fn max_fid_error(sys: &SpinSystem, cfg: &AcquisitionConfig) -> f64 {
    let exact = acquire_fid(sys, cfg, Engine::ExactOracle).unwrap();
    let approx = acquire_fid(sys, cfg, Engine::TrotterCircuit).unwrap();
    exact.mx.iter().zip(&approx.mx).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
}

#[test]
fn lie_trotter_error_falls_as_one_over_reps() {
    let sys = SpinSystem::from_offsets_hz("abc", &[120.0, 150.0, 210.0], &[(0, 1, 9.0), (1, 2, -6.0), (0, 2, 3.0)]).unwrap();
    // the asymptotic regime starts around 32 steps for this system
    let errs: Vec<f64> = [32, 64, 128]
        .iter()
        .map(|&reps| rms_fid_error(&sys, &AcquisitionConfig { repetitions: reps, ..short_grid(256) }))
        .collect();
    for w in errs.windows(2) {
        let ratio = w[0] / w[1];
        assert!((1.6..2.5).contains(&ratio), "{errs:?}");
    }
}

#[test]
fn suzuki_orders_converge_faster() {
    let sys = SpinSystem::from_offsets_hz("abc", &[120.0, 150.0, 210.0], &[(0, 1, 9.0), (1, 2, -6.0), (0, 2, 3.0)]).unwrap();
    let err = |formula, reps| max_fid_error(&sys, &AcquisitionConfig { formula, repetitions: reps, ..short_grid(256) });
    let s2 = ProductFormula::suzuki(2).unwrap();
    let ratio = err(s2, 8) / err(s2, 16);
    assert!((3.2..5.0).contains(&ratio), "second-order ratio {ratio}");
    let lie = err(ProductFormula::LieTrotter, 8);
    assert!(err(s2, 8) < lie);
    assert!(err(ProductFormula::suzuki(4).unwrap(), 8) < err(s2, 8));
}

#[test]
fn uncoupled_systems_are_exact_at_one_step() {
    let sys = SpinSystem::from_offsets_hz("free", &[310.0, 1875.5, 3999.0], &[]).unwrap();
    assert!(max_fid_error(&sys, &short_grid(4096)) < 1e-10);
}

#[test]
fn fid_starts_at_half_n() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for n in 1..=5 {
        let sys = random_system(&mut rng, n, 4000.0, 20.0, 0.7);
        for engine in [Engine::ExactOracle, Engine::TrotterCircuit] {
            let fid = acquire_fid(&sys, &short_grid(2), engine).unwrap();
            assert!((fid.mx[0] - n as f64 / 2.0).abs() < 1e-12);
        }
    }
}

#[test]
fn pre_routing_two_qubit_count_is_six_per_coupling_per_step() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for trial in 0..15 {
        let sys = random_system(&mut rng, 2 + trial % 6, 4000.0, 20.0, 0.6);
        let m = sys.couplings(0.0).len();
        for reps in [1, 2, 5] {
            let logical = build_fid_circuit(&sys, 2e-3, reps, ProductFormula::LieTrotter).unwrap();
            assert_eq!(logical.count(GateKind::Rxx) + logical.count(GateKind::Ryy) + logical.count(GateKind::Rzz), 3 * m * reps);
            for basis in [NativeBasis::Cx, NativeBasis::Ecr] {
                let native = decompose_to_native(&logical, basis).unwrap();
                assert_eq!(native.two_qubit_count(), 6 * m * reps);
                assert_eq!(native.count(basis.gate_kind()), 6 * m * reps);
            }
        }
    }
}

#[test]
fn total_z_commutes_with_random_hamiltonians() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for trial in 0..50 {
        let sys = random_system(&mut rng, 1 + trial % 6, 4000.0, 20.0, 0.8);
        assert!(total_z_commutator_norm(&build_terms(&sys)).unwrap() <= 1e-12);
    }
}

#[test]
fn energy_is_conserved_by_exact_evolution() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let sys = random_system(&mut rng, 5, 3000.0, 15.0, 0.9);
    let dense = realize_dense(&build_terms(&sys)).unwrap();
    let prop = dense.propagator().unwrap();
    let psi0 = StateVector::plus(5);
    let e0 = dense.expectation(&psi0).unwrap();
    for t in [1e-4, 3.3e-3, 0.25, 1.7] {
        let psi = prop.evolve(&psi0, t).unwrap();
        assert!((psi.norm() - 1.0).abs() < 1e-12);
        assert!((dense.expectation(&psi).unwrap() - e0).abs() < 1e-9 * e0.abs().max(1.0));
    }
}

#[test]
fn ab_spectrum_eigenvalues_match_closed_form() {
    let (nu1, nu2, j) = (100.0, 300.0, 10.0);
    let sys = SpinSystem::from_offsets_hz("ab", &[nu1, nu2], &[(0, 1, j)]).unwrap();
    let dense = realize_dense(&build_terms(&sys)).unwrap();
    let mut got = dense.propagator().unwrap().eigenvalues();
    got.sort_by(f64::total_cmp);

    let (w1, w2, pj) = (2.0 * PI * nu1, 2.0 * PI * nu2, PI * j);
    let root = 0.5 * ((w1 - w2).powi(2) + (2.0 * pj).powi(2)).sqrt();
    let mut want = vec![
        0.5 * (w1 + w2) + 0.5 * pj,
        -0.5 * (w1 + w2) + 0.5 * pj,
        -0.5 * pj + root,
        -0.5 * pj - root,
    ];
    want.sort_by(f64::total_cmp);
    for (a, b) in got.iter().zip(&want) {
        assert!((a - b).abs() < 1e-9, "{got:?} vs {want:?}");
    }
}

#[test]
fn cluster_fids_add_up_to_the_full_fid() {
    let sys = SpinSystem::from_offsets_hz(
        "two_islands",
        &[400.0, 450.0, 1200.0, 2500.0, 2540.0, 3100.0],
        &[(0, 1, 7.0), (3, 4, -12.0), (4, 5, 4.5), (3, 5, 2.0)],
    )
    .unwrap();
    let clusters = decompose_clusters(&sys, 0.0);
    assert_eq!(clusters.len(), 3);
    let cfg = short_grid(1024);
    let full = acquire_fid(&sys, &cfg, Engine::ExactOracle).unwrap();
    let summed = clusters
        .iter()
        .map(|c| acquire_fid(&c.system, &cfg, Engine::ExactOracle).unwrap())
        .reduce(|a, b| a.add(&b).unwrap())
        .unwrap();
    let err = full.mx.iter().zip(&summed.mx).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(err < 1e-10, "{err}");
}
