//! Rotating-frame Hamiltonian as Pauli terms, its dense realization, and the
//! exact propagator used as the reference engine.
//!
//! Units: coefficients are angular frequencies (rad/s) and ℏ = 1, so the
//! propagator is simply `exp(-iHt)` with `t` in seconds.
//!
//! Term coefficients never include the factor ½ of the spin operators
//! `I^a = σ^a/2`; that factor is applied once per Pauli factor when a term is
//! realized as a matrix (or converted to a rotation angle in
//! [`crate::circuit`]).

use std::f64::consts::PI;
use std::fmt;
use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::simulator::StateVector;
use crate::spin_model::SpinSystem;

/// Largest spin count for which dense matrices are built.
pub const DENSE_LIMIT: usize = 14;

/// Relative tolerance used when checking Hermiticity.
pub const HERMITIAN_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Axis::X => "X",
            Axis::Y => "Y",
            Axis::Z => "Z",
        })
    }
}

/// `coefficient · Π I^{axis}_{spin}` with one or two factors.
#[derive(Debug, Clone, PartialEq)]
pub struct PauliTerm {
    coefficient: f64,
    factors: Vec<(usize, Axis)>,
}

impl PauliTerm {
    pub fn new(coefficient: f64, factors: Vec<(usize, Axis)>) -> Result<Self> {
        if factors.is_empty() || factors.len() > 2 {
            return Err(Error::Validation(format!(
                "a term needs one or two factors, got {}",
                factors.len()
            )));
        }
        if factors.len() == 2 && factors[0].0 == factors[1].0 {
            return Err(Error::Validation(format!(
                "term acts twice on spin {}",
                factors[0].0
            )));
        }
        if !coefficient.is_finite() {
            return Err(Error::Validation("term coefficient is not finite".into()));
        }
        Ok(Self { coefficient, factors })
    }

    pub fn coefficient(&self) -> f64 {
        self.coefficient
    }

    pub fn factors(&self) -> &[(usize, Axis)] {
        &self.factors
    }

    pub fn qubits(&self) -> Vec<usize> {
        self.factors.iter().map(|&(q, _)| q).collect()
    }
}

impl fmt::Display for PauliTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.coefficient)?;
        for (q, a) in &self.factors {
            write!(f, " I{a}{q}")?;
        }
        Ok(())
    }
}

/// Weighted sum of 1- and 2-local spin-operator products.
#[derive(Debug, Clone, PartialEq)]
pub struct PauliHamiltonian {
    n_spins: usize,
    terms: Vec<PauliTerm>,
}

impl PauliHamiltonian {
    pub fn new(n_spins: usize, terms: Vec<PauliTerm>) -> Result<Self> {
        for t in &terms {
            if let Some(&(q, _)) = t.factors.iter().find(|(q, _)| *q >= n_spins) {
                return Err(Error::Validation(format!(
                    "term {t} acts on spin {q} of a {n_spins}-spin system"
                )));
            }
        }
        Ok(Self { n_spins, terms })
    }

    pub fn n_spins(&self) -> usize {
        self.n_spins
    }

    pub fn terms(&self) -> &[PauliTerm] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }
}

/// Rotating-frame Hamiltonian `Σ ω_k I^Z_k + 2π Σ_{k<l} J_kl (I^X I^X + I^Y I^Y + I^Z I^Z)`.
///
/// One Z term per spin with nonzero offset, then XX, YY, ZZ for every pair
/// with nonzero coupling, pairs in lexicographic order.
pub fn build_terms(sys: &SpinSystem) -> PauliHamiltonian {
    let mut terms = Vec::new();
    for (k, &w) in sys.offsets().iter().enumerate() {
        if w != 0.0 {
            terms.push(PauliTerm { coefficient: w, factors: vec![(k, Axis::Z)] });
        }
    }
    for (k, l, j) in sys.couplings(0.0) {
        let c = 2.0 * PI * j;
        for axis in [Axis::X, Axis::Y, Axis::Z] {
            terms.push(PauliTerm { coefficient: c, factors: vec![(k, axis), (l, axis)] });
        }
    }
    PauliHamiltonian { n_spins: sys.n_spins(), terms }
}

/// Action of a spin-operator product on basis state `x`: returns the image
/// index and the amplitude factor (including the ½ per factor).
fn apply_factors(factors: &[(usize, Axis)], x: usize) -> (usize, Complex64) {
    let mut y = x;
    let mut amp = Complex64::new(1.0, 0.0);
    for &(q, axis) in factors {
        let bit = (x >> q) & 1;
        match axis {
            Axis::X => y ^= 1 << q,
            Axis::Y => {
                y ^= 1 << q;
                // Y|0> = i|1>, Y|1> = -i|0>
                amp *= if bit == 0 { Complex64::i() } else { -Complex64::i() };
            }
            Axis::Z => {
                if bit == 1 {
                    amp = -amp;
                }
            }
        }
        amp *= 0.5;
    }
    (y, amp)
}

/// Dense `2^N × 2^N` matrix with a lazily computed spectral decomposition.
#[derive(Debug, Clone)]
pub struct DenseOperator {
    n_qubits: usize,
    matrix: DMatrix<Complex64>,
    spectral: OnceLock<Spectral>,
}

impl PartialEq for DenseOperator {
    fn eq(&self, other: &Self) -> bool {
        self.n_qubits == other.n_qubits && self.matrix == other.matrix
    }
}

pub fn realize_dense(h: &PauliHamiltonian) -> Result<DenseOperator> {
    realize_dense_with_limit(h, DENSE_LIMIT)
}

pub fn realize_dense_with_limit(h: &PauliHamiltonian, limit: usize) -> Result<DenseOperator> {
    let n = h.n_spins();
    if n > limit {
        return Err(Error::Resource(format!(
            "{n} spins exceeds the dense limit of {limit}"
        )));
    }
    let dim = 1usize << n;
    let mut m = DMatrix::<Complex64>::zeros(dim, dim);
    for term in h.terms() {
        for x in 0..dim {
            let (y, amp) = apply_factors(term.factors(), x);
            m[(y, x)] += amp * term.coefficient();
        }
    }
    Ok(DenseOperator { n_qubits: n, matrix: m, spectral: OnceLock::new() })
}

impl DenseOperator {
    /// Wraps an arbitrary square matrix whose dimension is a power of two.
    pub fn from_matrix(matrix: DMatrix<Complex64>) -> Result<Self> {
        let dim = matrix.nrows();
        if dim != matrix.ncols() || !dim.is_power_of_two() {
            return Err(Error::Validation(format!(
                "operator must be square with power-of-two dimension, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        Ok(Self { n_qubits: dim.trailing_zeros() as usize, matrix, spectral: OnceLock::new() })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    /// max |H - H†| over all entries.
    pub fn hermitian_deviation(&self) -> f64 {
        let m = &self.matrix;
        let mut worst = 0.0f64;
        for i in 0..m.nrows() {
            for j in i..m.ncols() {
                worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn max_abs(&self) -> f64 {
        self.matrix.iter().fold(0.0f64, |acc, z| acc.max(z.norm()))
    }

    fn check_hermitian(&self) -> Result<()> {
        let dev = self.hermitian_deviation();
        let tol = HERMITIAN_TOLERANCE * self.max_abs().max(1.0);
        if dev > tol {
            return Err(Error::Validation(format!(
                "operator is not Hermitian: max |H - H†| = {dev:e}"
            )));
        }
        Ok(())
    }

    /// ⟨ψ|H|ψ⟩ (real part).
    pub fn expectation(&self, psi: &StateVector) -> Result<f64> {
        check_dim(self.dim(), psi)?;
        let v = DVector::from_column_slice(psi.amplitudes());
        Ok(v.dotc(&(&self.matrix * &v)).re)
    }

    /// The exact propagator. The eigendecomposition is computed on first use
    /// and reused afterwards.
    pub fn propagator(&self) -> Result<ExactPropagator<'_>> {
        self.check_hermitian()?;
        let spectral = self.spectral.get_or_init(|| Spectral::new(&self.matrix));
        Ok(ExactPropagator { spectral, dim: self.dim() })
    }
}

fn check_dim(dim: usize, psi: &StateVector) -> Result<()> {
    if psi.dim() != dim {
        return Err(Error::Validation(format!(
            "state has dimension {} but operator has {dim}",
            psi.dim()
        )));
    }
    Ok(())
}

/// Eigendecomposition of one invariant subspace.
#[derive(Debug, Clone)]
struct Block {
    indices: Vec<usize>,
    eigenvalues: Vec<f64>,
    vectors: DMatrix<Complex64>,
}

/// Spectral decomposition over the connected components of the matrix's
/// nonzero pattern. For a Z-conserving Hamiltonian these refine the sectors
/// of equal Hamming weight.
#[derive(Debug, Clone)]
struct Spectral {
    blocks: Vec<Block>,
}

impl Spectral {
    fn new(m: &DMatrix<Complex64>) -> Self {
        let blocks = invariant_blocks(m)
            .into_iter()
            .map(|indices| {
                let k = indices.len();
                let sub = DMatrix::from_fn(k, k, |a, b| m[(indices[a], indices[b])]);
                let (eigenvalues, vectors) = hermitian_eigen(sub);
                Block { indices, eigenvalues, vectors }
            })
            .collect();
        Self { blocks }
    }
}

/// Index sets closed under the action of `m`, each sorted, ordered by
/// smallest member.
fn invariant_blocks(m: &DMatrix<Complex64>) -> Vec<Vec<usize>> {
    let dim = m.nrows();
    let mut parent: Vec<usize> = (0..dim).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    let zero = Complex64::new(0.0, 0.0);
    for j in 0..dim {
        for i in 0..j {
            if m[(i, j)] != zero || m[(j, i)] != zero {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[ri.max(rj)] = ri.min(rj);
                }
            }
        }
    }
    let mut blocks: Vec<Vec<usize>> = Vec::new();
    let mut slot = vec![usize::MAX; dim];
    for i in 0..dim {
        let r = find(&mut parent, i);
        if slot[r] == usize::MAX {
            slot[r] = blocks.len();
            blocks.push(Vec::new());
        }
        blocks[slot[r]].push(i);
    }
    blocks
}

/// Eigenpairs of a Hermitian block. The mean diagonal is removed before
/// diagonalizing and added back afterwards: eigen-solver error scales with
/// the norm of what it sees, and within a block the Zeeman part is mostly a
/// common offset.
fn hermitian_eigen(m: DMatrix<Complex64>) -> (Vec<f64>, DMatrix<Complex64>) {
    let k = m.nrows();
    let shift = (0..k).map(|i| m[(i, i)].re).sum::<f64>() / k as f64;
    let at = |i: usize, j: usize| if i == j { m[(i, j)] - shift } else { m[(i, j)] };
    if m.iter().all(|z| z.im == 0.0) {
        let a = faer::Mat::<f64>::from_fn(k, k, |i, j| at(i, j).re);
        let eig = a.self_adjoint_eigen(faer::Side::Lower).expect("self-adjoint eigensolver converges");
        let (u, s) = (eig.U(), eig.S().column_vector());
        (
            (0..k).map(|i| s[i] + shift).collect(),
            DMatrix::from_fn(k, k, |i, j| Complex64::new(u[(i, j)], 0.0)),
        )
    } else {
        let a = faer::Mat::<Complex64>::from_fn(k, k, at);
        let eig = a.self_adjoint_eigen(faer::Side::Lower).expect("self-adjoint eigensolver converges");
        let (u, s) = (eig.U(), eig.S().column_vector());
        ((0..k).map(|i| s[i].re + shift).collect(), DMatrix::from_fn(k, k, |i, j| u[(i, j)]))
    }
}

/// `exp(-iHt)` via the cached eigendecomposition of H.
#[derive(Debug, Clone, Copy)]
pub struct ExactPropagator<'a> {
    spectral: &'a Spectral,
    dim: usize,
}

impl<'a> ExactPropagator<'a> {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Eigenvalues of H, in no particular order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        self.spectral.blocks.iter().flat_map(|b| b.eigenvalues.iter().copied()).collect()
    }

    pub fn evolve(&self, psi0: &StateVector, t: f64) -> Result<StateVector> {
        Ok(self.prepare(psi0)?.state_at(t))
    }

    /// Projects `psi0` onto the eigenbasis once so each later time point
    /// costs a single matrix-vector product.
    pub fn prepare(&self, psi0: &StateVector) -> Result<PreparedEvolution<'a>> {
        check_dim(self.dim, psi0)?;
        let amps = psi0.amplitudes();
        let coefficients = self
            .spectral
            .blocks
            .iter()
            .map(|b| {
                let local = DVector::from_iterator(b.indices.len(), b.indices.iter().map(|&i| amps[i]));
                b.vectors.ad_mul(&local)
            })
            .collect();
        Ok(PreparedEvolution {
            spectral: self.spectral,
            coefficients,
            n_qubits: psi0.n_qubits(),
        })
    }

    /// Full unitary `exp(-iHt)`.
    pub fn unitary(&self, t: f64) -> DMatrix<Complex64> {
        let mut u = DMatrix::zeros(self.dim, self.dim);
        for b in &self.spectral.blocks {
            let phases = DVector::from_iterator(
                b.eigenvalues.len(),
                b.eigenvalues.iter().map(|&l| Complex64::from_polar(1.0, -l * t)),
            );
            let scaled = DMatrix::from_fn(b.vectors.nrows(), b.vectors.ncols(), |r, c| {
                b.vectors[(r, c)] * phases[c]
            });
            let local = scaled * b.vectors.adjoint();
            for (a, &i) in b.indices.iter().enumerate() {
                for (c, &j) in b.indices.iter().enumerate() {
                    u[(i, j)] = local[(a, c)];
                }
            }
        }
        u
    }
}

/// An initial state expressed in the eigenbasis, ready for repeated
/// evaluation at many times.
#[derive(Debug, Clone)]
pub struct PreparedEvolution<'a> {
    spectral: &'a Spectral,
    coefficients: Vec<DVector<Complex64>>,
    n_qubits: usize,
}

impl PreparedEvolution<'_> {
    pub fn state_at(&self, t: f64) -> StateVector {
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << self.n_qubits];
        for (b, c) in self.spectral.blocks.iter().zip(&self.coefficients) {
            let phased = DVector::from_iterator(
                c.len(),
                c.iter()
                    .zip(&b.eigenvalues)
                    .map(|(&ci, &l)| ci * Complex64::from_polar(1.0, -l * t)),
            );
            let local = &b.vectors * phased;
            for (a, &i) in b.indices.iter().enumerate() {
                amps[i] = local[a];
            }
        }
        StateVector::from_amplitudes_unchecked(self.n_qubits, amps)
    }
}

/// `exp(-iHt)|ψ0⟩` for a Hermitian `h`.
pub fn exact_evolve(h: &DenseOperator, psi0: &StateVector, t: f64) -> Result<StateVector> {
    h.propagator()?.evolve(psi0, t)
}

/// max |[Σ_k I^Z_k, H]| over all matrix entries.
pub fn total_z_commutator_norm(h: &PauliHamiltonian) -> Result<f64> {
    let dense = realize_dense(h)?;
    let n = h.n_spins() as f64;
    // Σ I^Z is diagonal with entry (n - 2·popcount)/2
    let sz = |i: usize| 0.5 * (n - 2.0 * i.count_ones() as f64);
    let m = dense.matrix();
    let mut worst = 0.0f64;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            worst = worst.max((m[(i, j)] * (sz(i) - sz(j))).norm());
        }
    }
    Ok(worst)
}
