//! State-vector execution of [`CircuitIR`]s.
//!
//! Qubit `k` is bit `k` of the amplitude index (little-endian): the state
//! `|q_{n-1} … q_1 q_0⟩` lives at index `Σ q_k 2^k`. For two-qubit gates on
//! operands `(a, b)` the local 4×4 matrix is indexed by `bit_a + 2·bit_b`.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_1_SQRT_2;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::circuit::{CircuitIR, Gate, GateKind};
use crate::error::{Error, Result};

/// Largest register for which [`circuit_unitary`] builds a dense matrix.
pub const UNITARY_LIMIT: usize = 12;

const NORM_TOLERANCE: f64 = 1e-10;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// `2^n` complex amplitudes of a pure state.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amps: Vec<Complex64>,
}

impl StateVector {
    /// `|0…0⟩`.
    pub fn zero(n_qubits: usize) -> Self {
        Self::basis(n_qubits, 0)
    }

    pub fn basis(n_qubits: usize, index: usize) -> Self {
        let mut amps = vec![ZERO; 1 << n_qubits];
        amps[index] = ONE;
        Self { n_qubits, amps }
    }

    /// Every qubit in `(|0⟩ + |1⟩)/√2`: the state right after a π/2 pulse
    /// about Y.
    pub fn plus(n_qubits: usize) -> Self {
        let dim = 1usize << n_qubits;
        let a = Complex64::new(1.0 / (dim as f64).sqrt(), 0.0);
        Self { n_qubits, amps: vec![a; dim] }
    }

    /// Builds a state from raw amplitudes, which must have unit norm.
    pub fn from_amplitudes(n_qubits: usize, amps: Vec<Complex64>) -> Result<Self> {
        if amps.len() != 1 << n_qubits {
            return Err(Error::Validation(format!(
                "{} amplitudes for {n_qubits} qubits",
                amps.len()
            )));
        }
        let s = Self { n_qubits, amps };
        if (s.norm() - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::Validation(format!("state norm is {}", s.norm())));
        }
        Ok(s)
    }

    pub(crate) fn from_amplitudes_unchecked(n_qubits: usize, amps: Vec<Complex64>) -> Self {
        debug_assert_eq!(amps.len(), 1 << n_qubits);
        Self { n_qubits, amps }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn inner(&self, other: &StateVector) -> Complex64 {
        self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    /// Applies one gate in place. Measurements are ignored.
    pub fn apply_gate(&mut self, gate: &Gate) {
        let q = gate.qubits();
        match gate.kind() {
            GateKind::Measure => {}
            GateKind::Rz => {
                let theta = gate.angle().unwrap_or(0.0);
                let (lo, hi) = (Complex64::from_polar(1.0, -0.5 * theta), Complex64::from_polar(1.0, 0.5 * theta));
                let mask = 1usize << q[0];
                for (i, a) in self.amps.iter_mut().enumerate() {
                    *a *= if i & mask == 0 { lo } else { hi };
                }
            }
            GateKind::Rzz => {
                let theta = gate.angle().unwrap_or(0.0);
                let (even, odd) = (Complex64::from_polar(1.0, -0.5 * theta), Complex64::from_polar(1.0, 0.5 * theta));
                let (ma, mb) = (1usize << q[0], 1usize << q[1]);
                for (i, a) in self.amps.iter_mut().enumerate() {
                    let parity = ((i & ma) != 0) ^ ((i & mb) != 0);
                    *a *= if parity { odd } else { even };
                }
            }
            kind if kind.arity() == 1 => {
                let m = single_qubit_matrix(kind, gate.angle().unwrap_or(0.0));
                self.apply_1q(q[0], &m);
            }
            kind => {
                let m = two_qubit_matrix(kind, gate.angle().unwrap_or(0.0));
                self.apply_2q(q[0], q[1], &m);
            }
        }
    }

    fn apply_1q(&mut self, q: usize, m: &[[Complex64; 2]; 2]) {
        let stride = 1usize << q;
        for base in (0..self.amps.len()).step_by(stride << 1) {
            for i in base..base + stride {
                let j = i | stride;
                let (a0, a1) = (self.amps[i], self.amps[j]);
                self.amps[i] = m[0][0] * a0 + m[0][1] * a1;
                self.amps[j] = m[1][0] * a0 + m[1][1] * a1;
            }
        }
    }

    fn apply_2q(&mut self, qa: usize, qb: usize, m: &[[Complex64; 4]; 4]) {
        let (ma, mb) = (1usize << qa, 1usize << qb);
        for base in 0..self.amps.len() {
            if base & (ma | mb) != 0 {
                continue;
            }
            let idx = [base, base | ma, base | mb, base | ma | mb];
            let v = idx.map(|i| self.amps[i]);
            for (r, &i) in idx.iter().enumerate() {
                self.amps[i] = (0..4).map(|c| m[r][c] * v[c]).sum();
            }
        }
    }

    /// Applies every gate of `c` in order; measurements are skipped.
    pub fn apply_circuit(&mut self, c: &CircuitIR) -> Result<()> {
        if c.n_qubits() != self.n_qubits {
            return Err(Error::Validation(format!(
                "circuit has {} qubits, state has {}",
                c.n_qubits(),
                self.n_qubits
            )));
        }
        for g in c.gates() {
            self.apply_gate(g);
        }
        Ok(())
    }

    /// ⟨Σ_k I^X_k⟩.
    pub fn expectation_mx(&self) -> f64 {
        let mut total = 0.0;
        for k in 0..self.n_qubits {
            let m = 1usize << k;
            total += self
                .amps
                .iter()
                .enumerate()
                .map(|(i, a)| (a.conj() * self.amps[i ^ m]).re)
                .sum::<f64>();
        }
        0.5 * total
    }

    /// ⟨Σ_k I^Y_k⟩.
    pub fn expectation_my(&self) -> f64 {
        let mut total = 0.0;
        for k in 0..self.n_qubits {
            let m = 1usize << k;
            // (Yψ)_i = i ψ_{i^m} if bit k of i is 1, else -i ψ_{i^m}
            total += self
                .amps
                .iter()
                .enumerate()
                .map(|(i, a)| {
                    let phase = if i & m != 0 { I } else { -I };
                    (a.conj() * phase * self.amps[i ^ m]).re
                })
                .sum::<f64>();
        }
        0.5 * total
    }

    /// ⟨Σ_k I^Z_k⟩. After the X-basis readout rotation this equals the
    /// pre-rotation ⟨M_X⟩.
    pub fn expectation_mz(&self) -> f64 {
        let n = self.n_qubits as f64;
        0.5 * self
            .amps
            .iter()
            .enumerate()
            .map(|(i, a)| a.norm_sqr() * (n - 2.0 * i.count_ones() as f64))
            .sum::<f64>()
    }
}

/// Returns a new state: `psi` evolved by `c`.
pub fn apply_circuit(c: &CircuitIR, psi: &StateVector) -> Result<StateVector> {
    let mut out = psi.clone();
    out.apply_circuit(c)?;
    Ok(out)
}

pub fn expectation_mx(psi: &StateVector) -> f64 {
    psi.expectation_mx()
}

pub fn expectation_my(psi: &StateVector) -> f64 {
    psi.expectation_my()
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// 2×2 matrix of a single-qubit gate, rows/columns indexed by the qubit bit.
pub fn single_qubit_matrix(kind: GateKind, angle: f64) -> [[Complex64; 2]; 2] {
    let (co, si) = ((0.5 * angle).cos(), (0.5 * angle).sin());
    match kind {
        GateKind::Rx => [[c(co, 0.0), c(0.0, -si)], [c(0.0, -si), c(co, 0.0)]],
        GateKind::Ry => [[c(co, 0.0), c(-si, 0.0)], [c(si, 0.0), c(co, 0.0)]],
        GateKind::Rz => [[Complex64::from_polar(1.0, -0.5 * angle), ZERO], [ZERO, Complex64::from_polar(1.0, 0.5 * angle)]],
        GateKind::H => {
            let h = c(FRAC_1_SQRT_2, 0.0);
            [[h, h], [h, -h]]
        }
        GateKind::Sx => [[c(0.5, 0.5), c(0.5, -0.5)], [c(0.5, -0.5), c(0.5, 0.5)]],
        GateKind::Measure => [[ONE, ZERO], [ZERO, ONE]],
        other => panic!("{} is not a single-qubit gate", other.name()),
    }
}

fn kron_local(op_a: [[Complex64; 2]; 2], op_b: [[Complex64; 2]; 2]) -> [[Complex64; 4]; 4] {
    let mut m = [[ZERO; 4]; 4];
    for (r, row) in m.iter_mut().enumerate() {
        for (col, entry) in row.iter_mut().enumerate() {
            *entry = op_a[r & 1][col & 1] * op_b[r >> 1][col >> 1];
        }
    }
    m
}

/// 4×4 matrix of a two-qubit gate on operands `(a, b)`, indexed by
/// `bit_a + 2·bit_b`.
pub fn two_qubit_matrix(kind: GateKind, angle: f64) -> [[Complex64; 4]; 4] {
    let id = [[ONE, ZERO], [ZERO, ONE]];
    let x = [[ZERO, ONE], [ONE, ZERO]];
    let y = [[ZERO, -I], [I, ZERO]];
    let z = [[ONE, ZERO], [ZERO, -ONE]];
    let (co, si) = ((0.5 * angle).cos(), (0.5 * angle).sin());
    let rotation = |p: [[Complex64; 2]; 2]| {
        let pp = kron_local(p, p);
        let mut m = [[ZERO; 4]; 4];
        for r in 0..4 {
            for col in 0..4 {
                let ident = if r == col { co } else { 0.0 };
                m[r][col] = c(ident, 0.0) - I * si * pp[r][col];
            }
        }
        m
    };
    match kind {
        GateKind::Rxx => rotation(x),
        GateKind::Ryy => rotation(y),
        GateKind::Rzz => rotation(z),
        GateKind::Cx => {
            // control a, target b: swaps local indices 1 (a=1,b=0) and 3
            let mut m = [[ZERO; 4]; 4];
            m[0][0] = ONE;
            m[2][2] = ONE;
            m[1][3] = ONE;
            m[3][1] = ONE;
            m
        }
        GateKind::Swap => {
            let mut m = [[ZERO; 4]; 4];
            m[0][0] = ONE;
            m[3][3] = ONE;
            m[1][2] = ONE;
            m[2][1] = ONE;
            m
        }
        GateKind::Ecr => {
            // ECR(a,b) = RZX(π/2)·X_a = (X_a - i Z_a X_a ⊗ X_b)/√2
            let zx = [[ZERO, ONE], [-ONE, ZERO]];
            let first = kron_local(x, id);
            let second = kron_local(zx, x);
            let mut m = [[ZERO; 4]; 4];
            for r in 0..4 {
                for col in 0..4 {
                    m[r][col] = (first[r][col] - I * second[r][col]) * FRAC_1_SQRT_2;
                }
            }
            m
        }
        other => panic!("{} is not a two-qubit gate", other.name()),
    }
}

/// Dense unitary of `c` (measurements ignored), built column by column.
pub fn circuit_unitary(c: &CircuitIR) -> Result<DMatrix<Complex64>> {
    let n = c.n_qubits();
    if n > UNITARY_LIMIT {
        return Err(Error::Resource(format!(
            "{n} qubits exceeds the dense unitary limit of {UNITARY_LIMIT}"
        )));
    }
    let dim = 1usize << n;
    let mut u = DMatrix::zeros(dim, dim);
    for col in 0..dim {
        let mut psi = StateVector::basis(n, col);
        psi.apply_circuit(c)?;
        for (row, a) in psi.amplitudes().iter().enumerate() {
            u[(row, col)] = *a;
        }
    }
    Ok(u)
}

/// Outcome of repeated projective measurement of every qubit.
#[derive(Debug, Clone, PartialEq)]
pub struct ShotResult {
    pub shots: usize,
    /// Bitstring (as an integer, qubit k = bit k) → number of occurrences.
    pub counts: BTreeMap<usize, usize>,
    /// Mean over shots of `Σ_k (1 - 2 b_k) / 2`.
    pub mx_estimate: f64,
}

/// Draws `shots` bitstrings from `|ψ|²`.
pub fn sample_counts<R: Rng + ?Sized>(
    psi: &StateVector,
    shots: usize,
    rng: &mut R,
) -> BTreeMap<usize, usize> {
    let mut cumulative = Vec::with_capacity(psi.dim());
    let mut acc = 0.0;
    for a in psi.amplitudes() {
        acc += a.norm_sqr();
        cumulative.push(acc);
    }
    let mut counts = BTreeMap::new();
    for _ in 0..shots {
        let u = rng.gen::<f64>() * acc;
        let idx = cumulative.partition_point(|&c| c <= u).min(psi.dim() - 1);
        *counts.entry(idx).or_insert(0) += 1;
    }
    counts
}

fn shot_result(n_qubits: usize, shots: usize, counts: BTreeMap<usize, usize>) -> ShotResult {
    let n = n_qubits as f64;
    let total: f64 = counts
        .iter()
        .map(|(&bits, &k)| k as f64 * 0.5 * (n - 2.0 * bits.count_ones() as f64))
        .sum();
    ShotResult { shots, counts, mx_estimate: total / shots as f64 }
}

/// Runs `c` (which must end in a full measurement layer, readout rotation
/// included) on `psi0` and estimates M_X from `shots` samples.
pub fn sample_mx(c: &CircuitIR, psi0: &StateVector, shots: usize, seed: u64) -> Result<ShotResult> {
    sample_mx_with_rng(c, psi0, shots, &mut ChaCha8Rng::seed_from_u64(seed))
}

pub fn sample_mx_with_rng<R: Rng + ?Sized>(
    c: &CircuitIR,
    psi0: &StateVector,
    shots: usize,
    rng: &mut R,
) -> Result<ShotResult> {
    if shots == 0 {
        return Err(Error::Parameter("shots must be positive".into()));
    }
    if !c.ends_in_measurement() {
        return Err(Error::Parameter("circuit does not end in a full measurement layer".into()));
    }
    let psi = apply_circuit(c, psi0)?;
    Ok(sample_measured_state(&psi, shots, rng))
}

/// Samples a state that is already in the measurement basis.
pub fn sample_measured_state<R: Rng + ?Sized>(psi: &StateVector, shots: usize, rng: &mut R) -> ShotResult {
    shot_result(psi.n_qubits(), shots, sample_counts(psi, shots, rng))
}

/// Random stream for one `(time point, run)` of an acquisition.
///
/// ChaCha8 keyed by `base_seed`, with the stream id derived from the two
/// indices, so every point draws from its own sequence regardless of the
/// order in which points are evaluated.
pub fn point_rng(base_seed: u64, time_index: usize, run_index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(base_seed);
    rng.set_stream(((run_index as u64) << 32) | (time_index as u64 & 0xffff_ffff));
    rng
}
