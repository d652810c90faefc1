//! Spin systems, their JSON input schema, and coupling-graph clustering.
//!
//! A [`SpinSystem`] is the whole problem instance: chemical shifts on a
//! virtual spectrometer plus a symmetric matrix of scalar J-couplings. Shifts
//! are converted to rotating-frame angular offsets exactly once, at
//! construction, so nothing downstream ever handles ppm.

use std::collections::HashMap;
use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest asymmetry |J_kl - J_lk| (Hz) accepted when both orientations of a
/// coupling are supplied.
pub const SYMMETRY_TOLERANCE_HZ: f64 = 1e-9;

/// Spectrometer frequency used by [`SpinSystem::from_offsets_hz`].
pub const DEFAULT_SPECTROMETER_MHZ: f64 = 400.0;

/// A liquid-state spin-1/2 system in the rotating frame.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinSystem {
    name: String,
    labels: Vec<String>,
    spectrometer_mhz: f64,
    shifts_ppm: Vec<f64>,
    carrier_ppm: f64,
    j_matrix: DMatrix<f64>,
    offsets: Vec<f64>,
}

impl SpinSystem {
    /// Builds a validated system from a full coupling matrix in Hz.
    ///
    /// The matrix must have an exactly zero diagonal and be symmetric to
    /// within [`SYMMETRY_TOLERANCE_HZ`]; residual asymmetry below the
    /// tolerance is averaged away so the stored matrix is exactly symmetric.
    pub fn new(
        name: impl Into<String>,
        labels: Vec<String>,
        spectrometer_mhz: f64,
        shifts_ppm: Vec<f64>,
        carrier_ppm: f64,
        j_matrix: DMatrix<f64>,
    ) -> Result<Self> {
        let n = labels.len();
        if n == 0 {
            return Err(Error::Validation("spin system has no spins".into()));
        }
        if shifts_ppm.len() != n {
            return Err(Error::Validation(format!(
                "{} labels but {} chemical shifts",
                n,
                shifts_ppm.len()
            )));
        }
        if j_matrix.nrows() != n || j_matrix.ncols() != n {
            return Err(Error::Validation(format!(
                "coupling matrix is {}x{}, expected {n}x{n}",
                j_matrix.nrows(),
                j_matrix.ncols()
            )));
        }
        if !(spectrometer_mhz.is_finite() && spectrometer_mhz > 0.0) {
            return Err(Error::Validation(format!(
                "spectrometer frequency must be positive and finite, got {spectrometer_mhz}"
            )));
        }
        if !carrier_ppm.is_finite() {
            return Err(Error::Validation("carrier_ppm is not finite".into()));
        }
        for (label, shift) in labels.iter().zip(&shifts_ppm) {
            if !shift.is_finite() {
                return Err(Error::Validation(format!("shift of spin {label:?} is not finite")));
            }
        }

        let mut j_matrix = j_matrix;
        for k in 0..n {
            if j_matrix[(k, k)] != 0.0 {
                return Err(Error::Validation(format!(
                    "coupling matrix diagonal entry {k} is {} (must be 0)",
                    j_matrix[(k, k)]
                )));
            }
            for l in (k + 1)..n {
                let (a, b) = (j_matrix[(k, l)], j_matrix[(l, k)]);
                if !(a.is_finite() && b.is_finite()) {
                    return Err(Error::Validation(format!("coupling ({k},{l}) is not finite")));
                }
                if (a - b).abs() > SYMMETRY_TOLERANCE_HZ {
                    return Err(Error::Validation(format!(
                        "coupling matrix is not symmetric at ({k},{l}): {a} vs {b} Hz"
                    )));
                }
                let mean = 0.5 * (a + b);
                j_matrix[(k, l)] = mean;
                j_matrix[(l, k)] = mean;
            }
        }

        let offsets: Vec<f64> = shifts_ppm
            .iter()
            .map(|s| 2.0 * PI * (s - carrier_ppm) * spectrometer_mhz)
            .collect();
        if let Some(k) = offsets.iter().position(|w| !w.is_finite()) {
            return Err(Error::Validation(format!("offset of spin {k} is not finite")));
        }

        Ok(Self {
            name: name.into(),
            labels,
            spectrometer_mhz,
            shifts_ppm,
            carrier_ppm,
            j_matrix,
            offsets,
        })
    }

    /// Convenience constructor from rotating-frame offsets in Hz on a
    /// 400 MHz instrument with the carrier at 0 ppm. Couplings are
    /// `(k, l, hz)` triples.
    pub fn from_offsets_hz(
        name: impl Into<String>,
        offsets_hz: &[f64],
        couplings: &[(usize, usize, f64)],
    ) -> Result<Self> {
        let n = offsets_hz.len();
        let mut j = DMatrix::zeros(n, n);
        for &(k, l, hz) in couplings {
            if k >= n || l >= n || k == l {
                return Err(Error::Validation(format!("invalid coupling pair ({k},{l})")));
            }
            j[(k, l)] = hz;
            j[(l, k)] = hz;
        }
        let labels = (0..n).map(|k| format!("H{k}")).collect();
        let shifts = offsets_hz.iter().map(|hz| hz / DEFAULT_SPECTROMETER_MHZ).collect();
        Self::new(name, labels, DEFAULT_SPECTROMETER_MHZ, shifts, 0.0, j)
    }

    pub fn from_json_str(source: &str) -> Result<Self> {
        parse_spin_system(source)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn n_spins(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn spectrometer_mhz(&self) -> f64 {
        self.spectrometer_mhz
    }

    pub fn shifts_ppm(&self) -> &[f64] {
        &self.shifts_ppm
    }

    pub fn carrier_ppm(&self) -> f64 {
        self.carrier_ppm
    }

    pub fn j_matrix(&self) -> &DMatrix<f64> {
        &self.j_matrix
    }

    /// Scalar coupling between spins `k` and `l`, in Hz.
    pub fn j(&self, k: usize, l: usize) -> f64 {
        self.j_matrix[(k, l)]
    }

    /// Rotating-frame angular offsets ω_k in rad/s.
    pub fn offsets(&self) -> &[f64] {
        &self.offsets
    }

    /// Offset of spin `k` in Hz.
    pub fn offset_hz(&self, k: usize) -> f64 {
        self.offsets[k] / (2.0 * PI)
    }

    /// Coupled pairs `(k, l, J_kl)` with `k < l` and `|J_kl| > threshold`,
    /// in lexicographic order.
    pub fn couplings(&self, threshold_hz: f64) -> Vec<(usize, usize, f64)> {
        let n = self.n_spins();
        let mut out = Vec::new();
        for k in 0..n {
            for l in (k + 1)..n {
                let j = self.j_matrix[(k, l)];
                if j.abs() > threshold_hz {
                    out.push((k, l, j));
                }
            }
        }
        out
    }

    /// The system induced on `members` (indices into this system), keeping
    /// labels, shifts and the couplings among members.
    pub fn subsystem(&self, members: &[usize]) -> Result<SpinSystem> {
        if let Some(&bad) = members.iter().find(|&&m| m >= self.n_spins()) {
            return Err(Error::Validation(format!("member index {bad} out of range")));
        }
        let m = members.len();
        let j = DMatrix::from_fn(m, m, |a, b| self.j_matrix[(members[a], members[b])]);
        Self::new(
            format!("{}[{}]", self.name, join_indices(members)),
            members.iter().map(|&k| self.labels[k].clone()).collect(),
            self.spectrometer_mhz,
            members.iter().map(|&k| self.shifts_ppm[k]).collect(),
            self.carrier_ppm,
            j,
        )
    }

    /// Serializes back to the sparse upper-triangle JSON schema.
    pub fn to_document(&self) -> SpinSystemDocument {
        SpinSystemDocument {
            name: self.name.clone(),
            spectrometer_mhz: self.spectrometer_mhz,
            carrier_ppm: Some(self.carrier_ppm),
            spins: self
                .labels
                .iter()
                .zip(&self.shifts_ppm)
                .map(|(label, &shift_ppm)| SpinEntry { label: label.clone(), shift_ppm })
                .collect(),
            j_couplings: self
                .couplings(0.0)
                .into_iter()
                .map(|(i, j, hz)| CouplingEntry { i, j, hz })
                .collect(),
        }
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&self.to_document()).expect("spin system document serializes")
    }
}

fn join_indices(members: &[usize]) -> String {
    members.iter().map(|m| m.to_string()).collect::<Vec<_>>().join(",")
}

/// On-disk form of a spin system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpinSystemDocument {
    pub name: String,
    pub spectrometer_mhz: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub carrier_ppm: Option<f64>,
    pub spins: Vec<SpinEntry>,
    pub j_couplings: Vec<CouplingEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpinEntry {
    pub label: String,
    pub shift_ppm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CouplingEntry {
    pub i: usize,
    pub j: usize,
    pub hz: f64,
}

impl SpinSystemDocument {
    /// Validates the document and builds the system.
    ///
    /// Couplings are normally listed once per pair. A pair listed in both
    /// orientations is accepted only if the two values agree to
    /// [`SYMMETRY_TOLERANCE_HZ`].
    pub fn into_system(self) -> Result<SpinSystem> {
        let n = self.spins.len();
        let mut supplied: HashMap<(usize, usize), f64> = HashMap::new();
        for c in &self.j_couplings {
            if c.i >= n || c.j >= n {
                return Err(Error::Validation(format!(
                    "coupling ({},{}) refers to a spin outside 0..{n}",
                    c.i, c.j
                )));
            }
            if c.i == c.j {
                return Err(Error::Validation(format!("self-coupling on spin {}", c.i)));
            }
            if !c.hz.is_finite() {
                return Err(Error::Validation(format!("coupling ({},{}) is not finite", c.i, c.j)));
            }
            if supplied.insert((c.i, c.j), c.hz).is_some() {
                return Err(Error::Schema(format!("coupling ({},{}) listed twice", c.i, c.j)));
            }
        }

        let mut j = DMatrix::zeros(n, n);
        for (&(a, b), &hz) in &supplied {
            j[(a, b)] = hz;
            if !supplied.contains_key(&(b, a)) {
                j[(b, a)] = hz;
            }
        }

        let (labels, shifts): (Vec<_>, Vec<_>) =
            self.spins.into_iter().map(|s| (s.label, s.shift_ppm)).unzip();
        SpinSystem::new(
            self.name,
            labels,
            self.spectrometer_mhz,
            shifts,
            self.carrier_ppm.unwrap_or(0.0),
            j,
        )
    }
}

/// Parses a spin system from its JSON document.
pub fn parse_spin_system(source: &str) -> Result<SpinSystem> {
    let doc: SpinSystemDocument =
        serde_json::from_str(source).map_err(|e| Error::Schema(e.to_string()))?;
    doc.into_system()
}

/// Undirected graph of couplings whose magnitude exceeds a threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingGraph {
    n: usize,
    threshold_hz: f64,
    edges: Vec<(usize, usize)>,
}

impl CouplingGraph {
    pub fn n_vertices(&self) -> usize {
        self.n
    }

    pub fn threshold_hz(&self) -> f64 {
        self.threshold_hz
    }

    /// Edges `(k, l)` with `k < l`, lexicographically sorted.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn contains(&self, k: usize, l: usize) -> bool {
        let key = (k.min(l), k.max(l));
        self.edges.binary_search(&key).is_ok()
    }
}

pub fn coupling_graph(sys: &SpinSystem, coupling_threshold_hz: f64) -> CouplingGraph {
    CouplingGraph {
        n: sys.n_spins(),
        threshold_hz: coupling_threshold_hz,
        edges: sys
            .couplings(coupling_threshold_hz)
            .into_iter()
            .map(|(k, l, _)| (k, l))
            .collect(),
    }
}

/// A connected component of the coupling graph together with its induced
/// subsystem.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinCluster {
    pub members: Vec<usize>,
    pub system: SpinSystem,
}

impl SpinCluster {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

/// Splits the system into connected components of its coupling graph,
/// ordered by smallest member index.
pub fn decompose_clusters(sys: &SpinSystem, coupling_threshold_hz: f64) -> Vec<SpinCluster> {
    let graph = coupling_graph(sys, coupling_threshold_hz);
    let n = sys.n_spins();
    let mut parent: Vec<usize> = (0..n).collect();

    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }

    for &(k, l) in graph.edges() {
        let (rk, rl) = (find(&mut parent, k), find(&mut parent, l));
        if rk != rl {
            // keep the smaller index as root so roots are stable
            parent[rk.max(rl)] = rk.min(rl);
        }
    }

    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut slot: HashMap<usize, usize> = HashMap::new();
    for k in 0..n {
        let root = find(&mut parent, k);
        let idx = *slot.entry(root).or_insert_with(|| {
            groups.push(Vec::new());
            groups.len() - 1
        });
        groups[idx].push(k);
    }

    groups
        .into_iter()
        .map(|members| {
            let system = sys.subsystem(&members).expect("cluster members are valid indices");
            SpinCluster { members, system }
        })
        .collect()
}
