mod common;

use common::*;
use nalgebra::DMatrix;
use nmrqsim::circuit::{build_fid_circuit, decompose_to_native, CircuitIR, NativeBasis, ProductFormula};
use nmrqsim::simulator::circuit_unitary;
use nmrqsim::transpiler::{heavy_hex, route, Topology, TranspileReport};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn embed(x: usize, layout: &[usize]) -> usize {
    layout.iter().enumerate().map(|(k, &p)| ((x >> k) & 1) << p).sum()
}

/// Logical action of the routed circuit: `P_out† U_routed P_in`.
fn logical_action(routed: &CircuitIR, report: &TranspileReport, n_logical: usize) -> DMatrix<Complex64> {
    let u = circuit_unitary(routed).unwrap();
    let d = 1 << n_logical;
    DMatrix::from_fn(d, d, |r, col| u[(embed(r, &report.final_layout), embed(col, &report.initial_layout))])
}

fn assert_legal(routed: &CircuitIR, topo: &Topology) {
    for g in routed.gates().iter().filter(|g| g.is_two_qubit()) {
        let q = g.qubits();
        assert!(topo.are_adjacent(q[0], q[1]), "{g} is not on an edge of {}", topo.name());
    }
}

fn small_topologies() -> Vec<Topology> {
    vec![
        Topology::line(5).unwrap(),
        Topology::new("tee", 5, [(0, 1), (1, 2), (1, 3), (3, 4)]).unwrap(),
        Topology::new("ring", 6, [(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 0)]).unwrap(),
    ]
}

#[test]
fn routed_fid_circuits_are_legal_and_equivalent() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for trial in 0..12 {
        let n = 2 + trial % 4;
        let sys = random_system(&mut rng, n, 2000.0, 15.0, 0.8);
        let logical = build_fid_circuit(&sys, 3.1e-3, 2, ProductFormula::LieTrotter).unwrap().without_measurements();
        let want = circuit_unitary(&logical).unwrap();
        for topo in small_topologies() {
            for basis in [NativeBasis::Cx, NativeBasis::Ecr] {
                let native = decompose_to_native(&logical, basis).unwrap();
                let (routed, report) = route(&native, &topo, trial as u64).unwrap();
                assert_legal(&routed, &topo);
                assert_eq!(report.pre_routing_twoq_count, native.two_qubit_count());
                assert_eq!(report.twoq_count, native.two_qubit_count() + 3 * report.swaps);
                let d = phase_distance(&logical_action(&routed, &report, n), &want);
                assert!(d < 1e-9, "trial {trial} on {} ({basis}): {d}", topo.name());
            }
        }
    }
}

#[test]
fn complete_graph_on_a_line_needs_swaps() {
    let sys = fully_connected(5, 7.0);
    let native =
        decompose_to_native(&build_fid_circuit(&sys, 1e-3, 1, ProductFormula::LieTrotter).unwrap(), NativeBasis::Ecr).unwrap();
    let topo = Topology::line(5).unwrap();
    let (routed, report) = route(&native, &topo, 0).unwrap();
    assert!(report.swaps > 0);
    assert_legal(&routed, &topo);
    assert!(routed.ends_in_measurement());
}

#[test]
fn routing_is_deterministic_per_seed() {
    let sys = fully_connected(6, 5.0);
    let native =
        decompose_to_native(&build_fid_circuit(&sys, 1e-3, 1, ProductFormula::LieTrotter).unwrap(), NativeBasis::Ecr).unwrap();
    let topo = heavy_hex(127).unwrap();
    let (a, ra) = route(&native, &topo, 3).unwrap();
    let (b, rb) = route(&native, &topo, 3).unwrap();
    assert_eq!(ra, rb);
    assert_eq!(a.to_string(), b.to_string());
}

#[test]
fn oversized_circuit_is_a_resource_error() {
    let sys = fully_connected(6, 5.0);
    let native =
        decompose_to_native(&build_fid_circuit(&sys, 1e-3, 1, ProductFormula::LieTrotter).unwrap(), NativeBasis::Ecr).unwrap();
    let err = route(&native, &Topology::line(4).unwrap(), 0).unwrap_err();
    assert!(matches!(err, nmrqsim::Error::Resource(_)));
}

#[test]
fn eagle_heavy_hex_shape() {
    let topo = heavy_hex(127).unwrap();
    assert_eq!(topo.n_qubits(), 127);
    assert_eq!(topo.edges().len(), 144);
    assert!(topo.max_degree() <= 3);
    // degree-3 vertices never neighbour each other on a heavy-hex lattice
    for &(a, b) in topo.edges() {
        assert!(!(topo.degree(a) == 3 && topo.degree(b) == 3), "({a},{b})");
    }
    // first row is 0..=13, first bridge hangs below qubit 0
    assert!(topo.are_adjacent(0, 14) && topo.are_adjacent(14, 18));
    assert_eq!(topo.distance(0, 126), topo.shortest_path(0, 126).len() - 1);
}

#[test]
fn topology_json_round_trip() {
    let topo = Topology::new("tee", 5, [(0, 1), (1, 2), (1, 3), (3, 4)]).unwrap();
    let back = Topology::from_json_str(&topo.to_json_string()).unwrap();
    assert_eq!(back, topo);
    assert!(Topology::new("split", 4, [(0, 1), (2, 3)]).is_err());
}
