#![allow(dead_code)]

use nalgebra::DMatrix;
use nmrqsim::SpinSystem;
use num_complex::Complex64;
use rand::Rng;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn pauli(axis: char) -> DMatrix<Complex64> {
    let z = c(0.0, 0.0);
    let o = c(1.0, 0.0);
    let i = c(0.0, 1.0);
    match axis {
        'I' => DMatrix::from_row_slice(2, 2, &[o, z, z, o]),
        'X' => DMatrix::from_row_slice(2, 2, &[z, o, o, z]),
        'Y' => DMatrix::from_row_slice(2, 2, &[z, -i, i, z]),
        'Z' => DMatrix::from_row_slice(2, 2, &[o, z, z, -o]),
        _ => unreachable!(),
    }
}

/// Pauli string on `n` qubits; `ops` lists (qubit, axis). Qubit k is bit k.
pub fn pauli_string(n: usize, ops: &[(usize, char)]) -> DMatrix<Complex64> {
    let mut m = DMatrix::from_element(1, 1, c(1.0, 0.0));
    for q in (0..n).rev() {
        let axis = ops.iter().find(|(k, _)| *k == q).map(|(_, a)| *a).unwrap_or('I');
        m = m.kronecker(&pauli(axis));
    }
    m
}

/// `exp(-i θ/2 P)` for a Pauli string `P` (P² = I).
pub fn pauli_rotation(n: usize, ops: &[(usize, char)], theta: f64) -> DMatrix<Complex64> {
    let p = pauli_string(n, ops);
    let id = DMatrix::<Complex64>::identity(1 << n, 1 << n);
    id * c((theta / 2.0).cos(), 0.0) - p * c(0.0, (theta / 2.0).sin())
}

/// Largest entrywise deviation of `a` from `e^{iφ} b`, with φ chosen from
/// the overlap.
pub fn phase_distance(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> f64 {
    assert_eq!(a.shape(), b.shape());
    let overlap: Complex64 = b.iter().zip(a.iter()).map(|(x, y)| x.conj() * y).sum();
    let phase = if overlap.norm() > 1e-12 { overlap / overlap.norm() } else { c(1.0, 0.0) };
    a.iter().zip(b.iter()).map(|(x, y)| (x - phase * y).norm()).fold(0.0, f64::max)
}

pub fn max_abs_diff(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> f64 {
    (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Random isotropic system: offsets in `[0, max_offset_hz)`, each pair
/// coupled with probability `density` and |J| ≤ `max_j_hz`.
pub fn random_system<R: Rng>(rng: &mut R, n: usize, max_offset_hz: f64, max_j_hz: f64, density: f64) -> SpinSystem {
    let offsets: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..max_offset_hz)).collect();
    let mut couplings = Vec::new();
    for k in 0..n {
        for l in k + 1..n {
            if rng.gen_bool(density) {
                couplings.push((k, l, rng.gen_range(-max_j_hz..max_j_hz)));
            }
        }
    }
    SpinSystem::from_offsets_hz("random", &offsets, &couplings).unwrap()
}

pub fn fully_connected(n: usize, j_hz: f64) -> SpinSystem {
    let offsets: Vec<f64> = (0..n).map(|k| 200.0 + 150.0 * k as f64).collect();
    let mut couplings = Vec::new();
    for k in 0..n {
        for l in k + 1..n {
            couplings.push((k, l, j_hz + 0.5 * (k + l) as f64));
        }
    }
    SpinSystem::from_offsets_hz(&format!("complete{n}"), &offsets, &couplings).unwrap()
}
