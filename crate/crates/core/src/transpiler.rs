//! Placement and SWAP routing onto a constrained coupling map, and the
//! two-qubit resource metrics reported for it.
//!
//! The router is deliberately simple and deterministic:
//!
//! 1. **Placement.** Every (logical start, physical start) pair seeds a
//!    greedy embedding that walks the interaction graph breadth-first and
//!    puts each logical qubit on the free physical qubit closest (weighted
//!    by gate count) to its already-placed partners. The embedding with the
//!    smallest total excess distance wins.
//! 2. **Routing.** Gates are processed in order. A two-qubit gate on
//!    non-adjacent qubits is preceded by SWAPs along a shortest path; how
//!    many of those SWAPs move each operand is chosen by a short lookahead
//!    over upcoming gates.
//!
//! The seed only breaks ties, so the same `(circuit, topology, seed)` always
//! produces the same output.

use std::collections::{BTreeSet, HashMap, VecDeque};

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuit::{build_fid_circuit, decompose_to_native, CircuitIR, Gate, NativeBasis, ProductFormula};
use crate::error::{Error, Result};
use crate::spin_model::SpinSystem;

/// Number of upcoming two-qubit gates scored when choosing a SWAP split.
const LOOKAHEAD: usize = 20;

/// Undirected, connected coupling map.
#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    name: String,
    n: usize,
    edges: Vec<(usize, usize)>,
    adjacency: Vec<Vec<usize>>,
    distances: Vec<Vec<u32>>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TopologyDocument {
    #[serde(default)]
    name: Option<String>,
    n: usize,
    edges: Vec<[usize; 2]>,
}

impl Topology {
    pub fn new(name: impl Into<String>, n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        if n == 0 {
            return Err(Error::Validation("topology has no qubits".into()));
        }
        let mut set = BTreeSet::new();
        for (a, b) in edges {
            if a >= n || b >= n {
                return Err(Error::Validation(format!("edge ({a},{b}) outside 0..{n}")));
            }
            if a == b {
                return Err(Error::Validation(format!("self-edge on qubit {a}")));
            }
            set.insert((a.min(b), a.max(b)));
        }
        let edges: Vec<_> = set.into_iter().collect();
        let mut adjacency = vec![Vec::new(); n];
        for &(a, b) in &edges {
            adjacency[a].push(b);
            adjacency[b].push(a);
        }
        for nb in &mut adjacency {
            nb.sort_unstable();
        }
        let distances: Vec<Vec<u32>> = (0..n).map(|s| bfs_distances(&adjacency, s)).collect();
        if distances[0].iter().any(|&d| d == u32::MAX) {
            return Err(Error::Validation("topology is not connected".into()));
        }
        Ok(Self { name: name.into(), n, edges, adjacency, distances })
    }

    /// A path `0 - 1 - … - (n-1)`.
    pub fn line(n: usize) -> Result<Self> {
        Self::new(format!("line-{n}"), n, (1..n).map(|i| (i - 1, i)))
    }

    /// Parses `{ "n": int, "edges": [[i, j], ...] }` (optional `"name"`).
    pub fn from_json_str(source: &str) -> Result<Self> {
        let doc: TopologyDocument = serde_json::from_str(source).map_err(|e| Error::Schema(e.to_string()))?;
        let name = doc.name.unwrap_or_else(|| format!("custom-{}", doc.n));
        Self::new(name, doc.n, doc.edges.into_iter().map(|[a, b]| (a, b)))
    }

    pub fn to_json_string(&self) -> String {
        let doc = TopologyDocument {
            name: Some(self.name.clone()),
            n: self.n,
            edges: self.edges.iter().map(|&(a, b)| [a, b]).collect(),
        };
        serde_json::to_string(&doc).expect("topology serializes")
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn n_qubits(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn neighbors(&self, q: usize) -> &[usize] {
        &self.adjacency[q]
    }

    pub fn degree(&self, q: usize) -> usize {
        self.adjacency[q].len()
    }

    pub fn max_degree(&self) -> usize {
        (0..self.n).map(|q| self.degree(q)).max().unwrap_or(0)
    }

    pub fn are_adjacent(&self, a: usize, b: usize) -> bool {
        self.adjacency[a].binary_search(&b).is_ok()
    }

    pub fn distance(&self, a: usize, b: usize) -> usize {
        self.distances[a][b] as usize
    }

    /// Qubit sequence of a shortest path from `a` to `b` (both included),
    /// taking the lowest-numbered neighbor at each step.
    pub fn shortest_path(&self, a: usize, b: usize) -> Vec<usize> {
        let mut path = vec![a];
        let mut cur = a;
        while cur != b {
            let d = self.distances[cur][b];
            cur = *self.adjacency[cur]
                .iter()
                .find(|&&nb| self.distances[nb][b] + 1 == d)
                .expect("connected topology has a descending neighbor");
            path.push(cur);
        }
        path
    }
}

fn bfs_distances(adjacency: &[Vec<usize>], source: usize) -> Vec<u32> {
    let mut dist = vec![u32::MAX; adjacency.len()];
    dist[source] = 0;
    let mut queue = VecDeque::from([source]);
    while let Some(v) = queue.pop_front() {
        for &w in &adjacency[v] {
            if dist[w] == u32::MAX {
                dist[w] = dist[v] + 1;
                queue.push_back(w);
            }
        }
    }
    dist
}

/// Heavy-hexagon lattice in the numbering used by 127-qubit Eagle devices.
///
/// The lattice has `R ≥ 2` rows of qubits joined by rows of four bridge
/// qubits; sizes are `19R - 6` (32, 51, 70, 89, 108, 127, ...). Numbering runs
/// row by row, each row followed by the bridges below it. Bridges sit at
/// columns 0, 4, 8, 12 below even rows and 2, 6, 10, 14 below odd rows; the
/// first row spans columns 0..=13 and the last row drops whichever end column
/// no bridge reaches.
pub fn heavy_hex(num_qubits: usize) -> Result<Topology> {
    if (num_qubits + 6) % 19 != 0 || num_qubits < 32 {
        return Err(Error::Parameter(format!(
            "unsupported heavy-hex size {num_qubits}; supported sizes are 19R-6 for R >= 2 (32, 51, 70, 89, 108, 127, ...)"
        )));
    }
    let rows = (num_qubits + 6) / 19;
    let bridge_columns = |r: usize| -> [usize; 4] {
        if r % 2 == 0 {
            [0, 4, 8, 12]
        } else {
            [2, 6, 10, 14]
        }
    };
    let row_columns = |r: usize| -> std::ops::RangeInclusive<usize> {
        if r == 0 {
            0..=13
        } else if r == rows - 1 {
            if (rows - 2) % 2 == 1 {
                1..=14
            } else {
                0..=13
            }
        } else {
            0..=14
        }
    };

    let mut next = 0usize;
    let mut row_ids: Vec<HashMap<usize, usize>> = Vec::with_capacity(rows);
    let mut bridges: Vec<Vec<(usize, usize)>> = Vec::with_capacity(rows);
    for r in 0..rows {
        let mut ids = HashMap::new();
        for col in row_columns(r) {
            ids.insert(col, next);
            next += 1;
        }
        row_ids.push(ids);
        let mut b = Vec::new();
        if r + 1 < rows {
            for col in bridge_columns(r) {
                b.push((col, next));
                next += 1;
            }
        }
        bridges.push(b);
    }
    debug_assert_eq!(next, num_qubits);

    let mut edges = Vec::new();
    for r in 0..rows {
        let cols: Vec<usize> = row_columns(r).collect();
        for w in cols.windows(2) {
            edges.push((row_ids[r][&w[0]], row_ids[r][&w[1]]));
        }
        for &(col, bridge) in &bridges[r] {
            edges.push((row_ids[r][&col], bridge));
            edges.push((bridge, row_ids[r + 1][&col]));
        }
    }
    Topology::new(format!("heavy-hex-{num_qubits}"), num_qubits, edges)
}

/// Two-qubit resource metrics of a routed circuit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TranspileReport {
    pub twoq_count: usize,
    pub twoq_depth: usize,
    pub swaps: usize,
    pub pre_routing_twoq_count: usize,
    /// `initial_layout[logical] = physical` before the first gate.
    pub initial_layout: Vec<usize>,
    /// Logical-to-physical map after the last gate.
    pub final_layout: Vec<usize>,
}

type Weights = HashMap<(usize, usize), usize>;

fn interaction_weights(c: &CircuitIR) -> Weights {
    let mut w = HashMap::new();
    for g in c.gates().iter().filter(|g| g.is_two_qubit()) {
        let q = g.qubits();
        *w.entry((q[0].min(q[1]), q[0].max(q[1]))).or_insert(0) += 1;
    }
    w
}

struct Placer<'a> {
    topo: &'a Topology,
    n_logical: usize,
    neighbors: Vec<Vec<(usize, usize)>>,
    physical_rank: Vec<usize>,
}

impl<'a> Placer<'a> {
    fn new(topo: &'a Topology, n_logical: usize, weights: &Weights, rng: &mut ChaCha8Rng) -> Self {
        let mut neighbors = vec![Vec::new(); n_logical];
        let mut sorted: Vec<_> = weights.iter().map(|(&k, &v)| (k, v)).collect();
        sorted.sort_unstable();
        for ((a, b), w) in sorted {
            neighbors[a].push((b, w));
            neighbors[b].push((a, w));
        }
        for nb in &mut neighbors {
            nb.sort_by(|x, y| y.1.cmp(&x.1).then(x.0.cmp(&y.0)));
        }
        let mut order: Vec<usize> = (0..topo.n_qubits()).collect();
        order.shuffle(rng);
        let mut physical_rank = vec![0; topo.n_qubits()];
        for (rank, &p) in order.iter().enumerate() {
            physical_rank[p] = rank;
        }
        Self { topo, n_logical, neighbors, physical_rank }
    }

    /// Logical visiting order: BFS from `start` over the interaction graph,
    /// then remaining components by the same rule.
    fn visit_order(&self, start: usize) -> Vec<usize> {
        let mut seen = vec![false; self.n_logical];
        let mut order = Vec::with_capacity(self.n_logical);
        let starts = std::iter::once(start).chain(0..self.n_logical);
        for s in starts {
            if seen[s] {
                continue;
            }
            seen[s] = true;
            let mut queue = VecDeque::from([s]);
            while let Some(v) = queue.pop_front() {
                order.push(v);
                for &(w, _) in &self.neighbors[v] {
                    if !seen[w] {
                        seen[w] = true;
                        queue.push_back(w);
                    }
                }
            }
        }
        order
    }

    fn place_from(&self, start_logical: usize, start_physical: usize) -> (Vec<usize>, usize) {
        let topo = self.topo;
        let mut layout = vec![usize::MAX; self.n_logical];
        let mut used = vec![false; topo.n_qubits()];
        let mut cost = 0usize;
        let mut anchor = start_physical;
        for (i, q) in self.visit_order(start_logical).into_iter().enumerate() {
            let p = if i == 0 {
                start_physical
            } else {
                let placed: Vec<(usize, usize)> = self.neighbors[q]
                    .iter()
                    .filter(|(r, _)| layout[*r] != usize::MAX)
                    .map(|&(r, w)| (layout[r], w))
                    .collect();
                if placed.is_empty() {
                    // nothing to be close to: take the nearest free qubit to the last anchor
                    (0..topo.n_qubits())
                        .filter(|&p| !used[p])
                        .min_by_key(|&p| (topo.distance(anchor, p), self.physical_rank[p]))
                        .expect("topology has room")
                } else {
                    (0..topo.n_qubits())
                        .filter(|&p| !used[p])
                        .min_by_key(|&p| {
                            let c: usize = placed.iter().map(|&(pp, w)| w * topo.distance(pp, p)).sum();
                            (c, self.physical_rank[p])
                        })
                        .expect("topology has room")
                }
            };
            for &(r, w) in &self.neighbors[q] {
                if layout[r] != usize::MAX {
                    cost += w * (topo.distance(layout[r], p) - 1);
                }
            }
            layout[q] = p;
            used[p] = true;
            anchor = p;
        }
        (layout, cost)
    }

    fn best_layout(&self) -> Vec<usize> {
        if self.n_logical == 0 {
            return Vec::new();
        }
        let mut best: Option<(usize, usize, Vec<usize>)> = None;
        for start_l in 0..self.n_logical {
            for start_p in 0..self.topo.n_qubits() {
                let (layout, cost) = self.place_from(start_l, start_p);
                let key = (cost, self.physical_rank[start_p]);
                if best.as_ref().map_or(true, |(c, r, _)| key < (*c, *r)) {
                    best = Some((key.0, key.1, layout));
                }
                if key.0 == 0 && self.neighbors[start_l].is_empty() {
                    break;
                }
            }
            if best.as_ref().is_some_and(|b| b.0 == 0) {
                break;
            }
        }
        best.expect("at least one candidate").2
    }
}

struct Layout {
    l2p: Vec<usize>,
    p2l: Vec<Option<usize>>,
}

impl Layout {
    fn new(l2p: Vec<usize>, n_physical: usize) -> Self {
        let mut p2l = vec![None; n_physical];
        for (l, &p) in l2p.iter().enumerate() {
            p2l[p] = Some(l);
        }
        Self { l2p, p2l }
    }

    fn swap_physical(&mut self, a: usize, b: usize) {
        let (la, lb) = (self.p2l[a], self.p2l[b]);
        self.p2l[a] = lb;
        self.p2l[b] = la;
        if let Some(l) = la {
            self.l2p[l] = b;
        }
        if let Some(l) = lb {
            self.l2p[l] = a;
        }
    }
}

/// Places and routes `c` onto `topo`. Inserted SWAPs are expanded into three
/// native two-qubit gates of the circuit's own basis.
pub fn route(c: &CircuitIR, topo: &Topology, seed: u64) -> Result<(CircuitIR, TranspileReport)> {
    if c.n_qubits() > topo.n_qubits() {
        return Err(Error::Resource(format!(
            "circuit needs {} qubits but {} has {}",
            c.n_qubits(),
            topo.name(),
            topo.n_qubits()
        )));
    }
    let has_two_qubit = c.gates().iter().any(Gate::is_two_qubit);
    let basis = match NativeBasis::detect(c) {
        Some(b) => b,
        None if !has_two_qubit => NativeBasis::Cx,
        None => {
            return Err(Error::Parameter(
                "routing needs a circuit whose two-qubit gates are all CX or all ECR".into(),
            ))
        }
    };

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let weights = interaction_weights(c);
    let placer = Placer::new(topo, c.n_qubits(), &weights, &mut rng);
    let initial = placer.best_layout();
    let mut layout = Layout::new(initial.clone(), topo.n_qubits());

    let two_qubit_positions: Vec<usize> =
        c.gates().iter().enumerate().filter(|(_, g)| g.is_two_qubit()).map(|(i, _)| i).collect();

    let mut out = CircuitIR::new(topo.n_qubits());
    out.meta = c.meta.clone();
    let mut swaps = 0usize;
    let mut next_two_qubit = 0usize;

    for g in c.gates() {
        if !g.is_two_qubit() {
            out.push(g.remapped(|q| layout.l2p[q]))?;
            continue;
        }
        next_two_qubit += 1;
        let q = g.qubits();
        let (pa, pb) = (layout.l2p[q[0]], layout.l2p[q[1]]);
        if !topo.are_adjacent(pa, pb) {
            let path = topo.shortest_path(pa, pb);
            let hops = path.len() - 2;
            let upcoming = &two_qubit_positions[next_two_qubit..(next_two_qubit + LOOKAHEAD).min(two_qubit_positions.len())];
            let mut best: Option<(usize, usize, usize)> = None;
            for k in 0..=hops {
                let mut trial = Layout::new(layout.l2p.clone(), topo.n_qubits());
                apply_split(&mut trial, &path, k, hops, |_, _| {});
                let score: usize = upcoming
                    .iter()
                    .map(|&i| {
                        let uq = c.gates()[i].qubits();
                        topo.distance(trial.l2p[uq[0]], trial.l2p[uq[1]])
                    })
                    .sum();
                let balance = (2 * k).abs_diff(hops);
                let key = (score, balance, k);
                if best.map_or(true, |b| key < b) {
                    best = Some(key);
                }
            }
            let k = best.expect("at least one split").2;
            let mut emitted = Vec::new();
            apply_split(&mut layout, &path, k, hops, |a, b| emitted.push(Gate::swap(a, b)));
            swaps += emitted.len();
            let swap_block = CircuitIR::from_gates(topo.n_qubits(), emitted)?;
            out.extend(decompose_to_native(&swap_block, basis)?.gates().iter().copied())?;
        }
        out.push(g.remapped(|q| layout.l2p[q]))?;
    }

    let report = TranspileReport {
        twoq_count: out.two_qubit_count(),
        twoq_depth: out.two_qubit_depth(),
        swaps,
        pre_routing_twoq_count: c.two_qubit_count(),
        initial_layout: initial,
        final_layout: layout.l2p.clone(),
    };
    Ok((out, report))
}

/// Moves the qubit at `path[0]` forward `k` hops and the qubit at the end of
/// the path back `hops - k` hops, calling `on_swap` for each physical SWAP.
fn apply_split(layout: &mut Layout, path: &[usize], k: usize, hops: usize, mut on_swap: impl FnMut(usize, usize)) {
    for i in 0..k {
        layout.swap_physical(path[i], path[i + 1]);
        on_swap(path[i], path[i + 1]);
    }
    let last = path.len() - 1;
    for j in 0..(hops - k) {
        layout.swap_physical(path[last - j], path[last - j - 1]);
        on_swap(path[last - j], path[last - j - 1]);
    }
}

/// Least-squares fit `y ≈ a·N² + b·N + c`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadraticFit {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    /// ‖y − ŷ‖ / ‖y‖.
    pub relative_residual: f64,
}

impl QuadraticFit {
    /// Needs at least three distinct abscissae.
    pub fn fit(points: &[(f64, f64)]) -> Option<Self> {
        let distinct: BTreeSet<u64> = points.iter().map(|p| p.0.to_bits()).collect();
        if distinct.len() < 3 {
            return None;
        }
        let design = DMatrix::from_fn(points.len(), 3, |r, col| points[r].0.powi(2 - col as i32));
        let y = DVector::from_iterator(points.len(), points.iter().map(|p| p.1));
        let coeffs = design.clone().svd(true, true).solve(&y, 1e-12).ok()?;
        let residual = (&design * &coeffs - &y).norm();
        let scale = y.norm();
        Some(Self {
            a: coeffs[0],
            b: coeffs[1],
            c: coeffs[2],
            relative_residual: if scale > 0.0 { residual / scale } else { residual },
        })
    }

    pub fn eval(&self, n: f64) -> f64 {
        self.a * n * n + self.b * n + self.c
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingRow {
    pub name: String,
    pub n_spins: usize,
    pub couplings: usize,
    pub pre_routing_count: usize,
    pub twoq_count: usize,
    pub twoq_depth: usize,
    pub swaps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingStudy {
    pub topology: String,
    pub repetitions: usize,
    pub rows: Vec<ScalingRow>,
    pub count_fit: Option<QuadraticFit>,
    pub pre_routing_fit: Option<QuadraticFit>,
    pub depth_fit: Option<QuadraticFit>,
}

/// Options for [`scaling_study`] beyond the dataset and device.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StudyOptions {
    pub repetitions: usize,
    pub basis: NativeBasis,
    pub formula: ProductFormula,
    pub seed: u64,
}

impl Default for StudyOptions {
    fn default() -> Self {
        Self { repetitions: 1, basis: NativeBasis::Ecr, formula: ProductFormula::LieTrotter, seed: 0 }
    }
}

/// Compiles the FID circuit of one system and routes it.
pub fn compile_for_device(
    sys: &SpinSystem,
    topo: &Topology,
    opts: &StudyOptions,
) -> Result<(CircuitIR, TranspileReport)> {
    // angles do not affect routing; any nonzero time gives the full gate list
    let logical = build_fid_circuit(sys, 1e-3, opts.repetitions, opts.formula)?;
    let native = decompose_to_native(&logical, opts.basis)?;
    route(&native, topo, opts.seed)
}

/// Gate metrics for every system plus quadratic fits over N.
pub fn scaling_study(dataset: &[SpinSystem], topo: &Topology, opts: &StudyOptions) -> Result<ScalingStudy> {
    if dataset.is_empty() {
        return Err(Error::Parameter("scaling study needs at least one system".into()));
    }
    let rows = dataset
        .par_iter()
        .map(|sys| {
            let (_, report) = compile_for_device(sys, topo, opts)?;
            Ok(ScalingRow {
                name: sys.name().to_string(),
                n_spins: sys.n_spins(),
                couplings: sys.couplings(0.0).len(),
                pre_routing_count: report.pre_routing_twoq_count,
                twoq_count: report.twoq_count,
                twoq_depth: report.twoq_depth,
                swaps: report.swaps,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let fit = |f: fn(&ScalingRow) -> usize| {
        let pts: Vec<(f64, f64)> = rows.iter().map(|r| (r.n_spins as f64, f(r) as f64)).collect();
        QuadraticFit::fit(&pts)
    };
    Ok(ScalingStudy {
        topology: topo.name().to_string(),
        repetitions: opts.repetitions,
        count_fit: fit(|r| r.twoq_count),
        pre_routing_fit: fit(|r| r.pre_routing_count),
        depth_fit: fit(|r| r.twoq_depth),
        rows,
    })
}

impl ScalingStudy {
    /// `name,n_spins,twoq_count,twoq_depth,swaps` rows followed by `#` fit
    /// summary lines.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("name,n_spins,twoq_count,twoq_depth,swaps\n");
        for r in &self.rows {
            s.push_str(&format!("{},{},{},{},{}\n", r.name, r.n_spins, r.twoq_count, r.twoq_depth, r.swaps));
        }
        for (label, fit) in [("twoq_count", &self.count_fit), ("twoq_depth", &self.depth_fit)] {
            match fit {
                Some(f) => s.push_str(&format!(
                    "# fit {label} = {:.6}*N^2 + {:.6}*N + {:.6}; relative_residual = {:.6}\n",
                    f.a, f.b, f.c, f.relative_residual
                )),
                None => s.push_str(&format!("# fit {label}: fewer than 3 distinct N\n")),
            }
        }
        s
    }
}
