//! Gate-level representation of the FID experiment.
//!
//! A circuit is a flat, ordered list of [`Gate`]s. The FID circuit for a
//! time point `t` is
//!
//! ```text
//! RY(π/2) on every qubit
//! repetitions × product-formula step of length t / repetitions
//! RY(-π/2) on every qubit, MEASURE on every qubit
//! ```
//!
//! Angle conventions, with spin operators `I = σ/2`:
//!
//! | Hamiltonian term          | exponential over `dt`           | gate               |
//! |---------------------------|---------------------------------|--------------------|
//! | `ω_k I^Z_k`               | `exp(-i ω dt I^Z)`              | `RZ(ω dt)`         |
//! | `2πJ I^a_k I^a_l`         | `exp(-i 2πJ dt I^a I^a)`        | `Raa(π J dt)`      |
//!
//! where `RZ(θ) = exp(-iθσ^z/2)` and `Raa(θ) = exp(-iθ σ^a⊗σ^a / 2)`.

use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::hamiltonian::{build_terms, Axis, PauliHamiltonian, PauliTerm};
use crate::spin_model::SpinSystem;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GateKind {
    Rz,
    Rx,
    Ry,
    Rxx,
    Ryy,
    Rzz,
    H,
    Sx,
    Cx,
    Ecr,
    Swap,
    Measure,
}

impl GateKind {
    pub const ALL: [GateKind; 12] = [
        GateKind::Rz,
        GateKind::Rx,
        GateKind::Ry,
        GateKind::Rxx,
        GateKind::Ryy,
        GateKind::Rzz,
        GateKind::H,
        GateKind::Sx,
        GateKind::Cx,
        GateKind::Ecr,
        GateKind::Swap,
        GateKind::Measure,
    ];

    pub fn arity(self) -> usize {
        match self {
            GateKind::Rxx
            | GateKind::Ryy
            | GateKind::Rzz
            | GateKind::Cx
            | GateKind::Ecr
            | GateKind::Swap => 2,
            _ => 1,
        }
    }

    pub fn is_parametric(self) -> bool {
        matches!(
            self,
            GateKind::Rz | GateKind::Rx | GateKind::Ry | GateKind::Rxx | GateKind::Ryy | GateKind::Rzz
        )
    }

    pub fn name(self) -> &'static str {
        match self {
            GateKind::Rz => "RZ",
            GateKind::Rx => "RX",
            GateKind::Ry => "RY",
            GateKind::Rxx => "RXX",
            GateKind::Ryy => "RYY",
            GateKind::Rzz => "RZZ",
            GateKind::H => "H",
            GateKind::Sx => "SX",
            GateKind::Cx => "CX",
            GateKind::Ecr => "ECR",
            GateKind::Swap => "SWAP",
            GateKind::Measure => "MEASURE",
        }
    }
}

impl FromStr for GateKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        GateKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Parameter(format!("unknown gate kind {s:?}")))
    }
}

/// One gate: a kind, one or two distinct qubit operands and, for rotations,
/// an angle in radians.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gate {
    kind: GateKind,
    qubits: [usize; 2],
    angle: f64,
}

impl Gate {
    pub fn new(kind: GateKind, qubits: &[usize], angle: Option<f64>) -> Result<Self> {
        if qubits.len() != kind.arity() {
            return Err(Error::Validation(format!(
                "{} takes {} operand(s), got {}",
                kind.name(),
                kind.arity(),
                qubits.len()
            )));
        }
        if qubits.len() == 2 && qubits[0] == qubits[1] {
            return Err(Error::Validation(format!(
                "{} operands must be distinct, got {} twice",
                kind.name(),
                qubits[0]
            )));
        }
        let angle = match (kind.is_parametric(), angle) {
            (true, Some(a)) if a.is_finite() => a,
            (true, Some(a)) => {
                return Err(Error::Validation(format!("{} angle {a} is not finite", kind.name())))
            }
            (true, None) => {
                return Err(Error::Validation(format!("{} requires an angle", kind.name())))
            }
            (false, Some(_)) => {
                return Err(Error::Validation(format!("{} takes no angle", kind.name())))
            }
            (false, None) => 0.0,
        };
        let q1 = if qubits.len() == 2 { qubits[1] } else { qubits[0] };
        Ok(Self { kind, qubits: [qubits[0], q1], angle })
    }

    fn one(kind: GateKind, q: usize, angle: f64) -> Self {
        Self { kind, qubits: [q, q], angle }
    }

    fn two(kind: GateKind, a: usize, b: usize, angle: f64) -> Self {
        debug_assert_ne!(a, b);
        Self { kind, qubits: [a, b], angle }
    }

    pub fn rz(q: usize, theta: f64) -> Self {
        Self::one(GateKind::Rz, q, theta)
    }

    pub fn rx(q: usize, theta: f64) -> Self {
        Self::one(GateKind::Rx, q, theta)
    }

    pub fn ry(q: usize, theta: f64) -> Self {
        Self::one(GateKind::Ry, q, theta)
    }

    pub fn h(q: usize) -> Self {
        Self::one(GateKind::H, q, 0.0)
    }

    pub fn sx(q: usize) -> Self {
        Self::one(GateKind::Sx, q, 0.0)
    }

    pub fn measure(q: usize) -> Self {
        Self::one(GateKind::Measure, q, 0.0)
    }

    pub fn rxx(a: usize, b: usize, theta: f64) -> Self {
        Self::two(GateKind::Rxx, a, b, theta)
    }

    pub fn ryy(a: usize, b: usize, theta: f64) -> Self {
        Self::two(GateKind::Ryy, a, b, theta)
    }

    pub fn rzz(a: usize, b: usize, theta: f64) -> Self {
        Self::two(GateKind::Rzz, a, b, theta)
    }

    pub fn cx(control: usize, target: usize) -> Self {
        Self::two(GateKind::Cx, control, target, 0.0)
    }

    pub fn ecr(a: usize, b: usize) -> Self {
        Self::two(GateKind::Ecr, a, b, 0.0)
    }

    pub fn swap(a: usize, b: usize) -> Self {
        Self::two(GateKind::Swap, a, b, 0.0)
    }

    pub fn kind(&self) -> GateKind {
        self.kind
    }

    pub fn qubits(&self) -> &[usize] {
        &self.qubits[..self.kind.arity()]
    }

    pub fn angle(&self) -> Option<f64> {
        self.kind.is_parametric().then_some(self.angle)
    }

    pub fn is_two_qubit(&self) -> bool {
        self.kind.arity() == 2
    }

    /// The same gate with operands renamed through `map`.
    pub fn remapped(&self, map: impl Fn(usize) -> usize) -> Self {
        Self { kind: self.kind, qubits: [map(self.qubits[0]), map(self.qubits[1])], angle: self.angle }
    }
}

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.kind.name(), self.qubits[0])?;
        if self.is_two_qubit() {
            write!(f, ",{}", self.qubits[1])?;
        }
        if let Some(angle) = self.angle() {
            write!(f, ",{angle:?}")?;
        }
        Ok(())
    }
}

impl FromStr for Gate {
    type Err = Error;

    fn from_str(line: &str) -> Result<Self> {
        let line = line.trim();
        let (kind, rest) = line
            .split_once(char::is_whitespace)
            .ok_or_else(|| Error::Parameter(format!("malformed gate line {line:?}")))?;
        let kind: GateKind = kind.parse()?;
        let fields: Vec<&str> = rest.trim().split(',').map(str::trim).collect();
        let arity = kind.arity();
        let expected = arity + usize::from(kind.is_parametric());
        if fields.len() != expected {
            return Err(Error::Parameter(format!("malformed gate line {line:?}")));
        }
        let qubits = fields[..arity]
            .iter()
            .map(|q| q.parse::<usize>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::Parameter(format!("bad qubit index in {line:?}: {e}")))?;
        let angle = if kind.is_parametric() {
            Some(
                fields[arity]
                    .parse::<f64>()
                    .map_err(|e| Error::Parameter(format!("bad angle in {line:?}: {e}")))?,
            )
        } else {
            None
        };
        Gate::new(kind, &qubits, angle)
    }
}

/// Product formula used for each repetition of the evolution block.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProductFormula {
    /// First order: one exponential per term group, groups applied
    /// XX, YY, Z, ZZ.
    LieTrotter,
    /// Symmetric Suzuki formula of the given even order.
    Suzuki { order: u32 },
}

impl ProductFormula {
    pub fn suzuki(order: u32) -> Result<Self> {
        if order < 2 || order % 2 != 0 {
            return Err(Error::Parameter(format!(
                "Suzuki order must be even and at least 2, got {order}"
            )));
        }
        Ok(ProductFormula::Suzuki { order })
    }

    pub fn label(&self) -> String {
        match self {
            ProductFormula::LieTrotter => "lie".to_string(),
            ProductFormula::Suzuki { order } => format!("suzuki{order}"),
        }
    }
}

impl Default for ProductFormula {
    fn default() -> Self {
        ProductFormula::LieTrotter
    }
}

impl fmt::Display for ProductFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

impl FromStr for ProductFormula {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.to_ascii_lowercase();
        match lower.as_str() {
            "lie" | "lie-trotter" | "lie_trotter" | "trotter" => Ok(ProductFormula::LieTrotter),
            _ => match lower.strip_prefix("suzuki") {
                Some(order) => {
                    let order = order.trim_start_matches(['-', '_']);
                    let order: u32 = order.parse().map_err(|_| {
                        Error::Parameter(format!("unknown product formula {s:?}"))
                    })?;
                    ProductFormula::suzuki(order)
                }
                None => Err(Error::Parameter(format!("unknown product formula {s:?}"))),
            },
        }
    }
}

/// The four mutually commuting groups of Hamiltonian terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TermGroup {
    Xx,
    Yy,
    Z,
    Zz,
}

impl TermGroup {
    /// Application order of a first-order step (first applied first).
    pub const ORDER: [TermGroup; 4] = [TermGroup::Xx, TermGroup::Yy, TermGroup::Z, TermGroup::Zz];

    fn of(term: &PauliTerm) -> Option<TermGroup> {
        match term.factors() {
            [(_, Axis::Z)] => Some(TermGroup::Z),
            [(_, a), (_, b)] if a == b => Some(match a {
                Axis::X => TermGroup::Xx,
                Axis::Y => TermGroup::Yy,
                Axis::Z => TermGroup::Zz,
            }),
            _ => None,
        }
    }
}

/// One group exponential of a product formula: apply `group` for
/// `fraction · dt`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Layer {
    pub group: TermGroup,
    pub fraction: f64,
}

/// Sequence of group exponentials making up one step of `formula`, in
/// application order.
pub fn formula_schedule(formula: ProductFormula) -> Result<Vec<Layer>> {
    match formula {
        ProductFormula::LieTrotter => Ok(TermGroup::ORDER
            .iter()
            .map(|&group| Layer { group, fraction: 1.0 })
            .collect()),
        ProductFormula::Suzuki { order } => {
            ProductFormula::suzuki(order)?;
            Ok(suzuki_schedule(order, 1.0))
        }
    }
}

fn suzuki_schedule(order: u32, scale: f64) -> Vec<Layer> {
    if order == 2 {
        let [a, b, c, d] = TermGroup::ORDER;
        let half = 0.5 * scale;
        return vec![
            Layer { group: a, fraction: half },
            Layer { group: b, fraction: half },
            Layer { group: c, fraction: half },
            Layer { group: d, fraction: scale },
            Layer { group: c, fraction: half },
            Layer { group: b, fraction: half },
            Layer { group: a, fraction: half },
        ];
    }
    let k = f64::from(order / 2);
    let u = 1.0 / (4.0 - 4f64.powf(1.0 / (2.0 * k - 1.0)));
    let outer = suzuki_schedule(order - 2, u * scale);
    let inner = suzuki_schedule(order - 2, (1.0 - 4.0 * u) * scale);
    let mut out = Vec::with_capacity(5 * outer.len());
    out.extend_from_slice(&outer);
    out.extend_from_slice(&outer);
    out.extend_from_slice(&inner);
    out.extend_from_slice(&outer);
    out.extend_from_slice(&outer);
    out
}

/// Terms of `h` split into the four groups, each sorted lexicographically
/// by qubit operands.
fn grouped_terms(h: &PauliHamiltonian) -> Result<[Vec<&PauliTerm>; 4]> {
    let mut groups: [Vec<&PauliTerm>; 4] = Default::default();
    for term in h.terms() {
        let group = TermGroup::of(term).ok_or_else(|| {
            Error::Parameter(format!(
                "term {term} does not belong to one of the XX, YY, Z, ZZ groups"
            ))
        })?;
        groups[group as usize].push(term);
    }
    for g in &mut groups {
        g.sort_by_key(|t| t.qubits());
    }
    Ok(groups)
}

fn term_gate(group: TermGroup, term: &PauliTerm, dt: f64) -> Gate {
    let q = term.qubits();
    match group {
        TermGroup::Z => Gate::rz(q[0], term.coefficient() * dt),
        // exp(-i c dt σσ/4) = Raa(c dt / 2)
        TermGroup::Xx => Gate::rxx(q[0], q[1], 0.5 * term.coefficient() * dt),
        TermGroup::Yy => Gate::ryy(q[0], q[1], 0.5 * term.coefficient() * dt),
        TermGroup::Zz => Gate::rzz(q[0], q[1], 0.5 * term.coefficient() * dt),
    }
}

fn materialize(h: &PauliHamiltonian, schedule: &[Layer], dt: f64) -> Result<Vec<Gate>> {
    let groups = grouped_terms(h)?;
    let mut gates = Vec::new();
    for layer in schedule {
        for term in &groups[layer.group as usize] {
            gates.push(term_gate(layer.group, term, layer.fraction * dt));
        }
    }
    Ok(gates)
}

/// Gates of one first-order step of length `dt`.
pub fn lie_trotter_layers(h: &PauliHamiltonian, dt: f64) -> Result<Vec<Gate>> {
    materialize(h, &formula_schedule(ProductFormula::LieTrotter)?, dt)
}

/// Gates of one step of the symmetric Suzuki formula of even `order`.
pub fn suzuki_layers(h: &PauliHamiltonian, dt: f64, order: u32) -> Result<Vec<Gate>> {
    let formula = ProductFormula::suzuki(order)?;
    materialize(h, &formula_schedule(formula)?, dt)
}

/// Descriptive data carried alongside the gate list.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CircuitMeta {
    pub repetitions: usize,
    pub time_s: f64,
    pub formula: Option<ProductFormula>,
}

/// An ordered gate list over `n_qubits` qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct CircuitIR {
    n_qubits: usize,
    gates: Vec<Gate>,
    pub meta: CircuitMeta,
}

impl CircuitIR {
    pub fn new(n_qubits: usize) -> Self {
        Self { n_qubits, gates: Vec::new(), meta: CircuitMeta::default() }
    }

    pub fn from_gates(n_qubits: usize, gates: Vec<Gate>) -> Result<Self> {
        let mut c = Self::new(n_qubits);
        c.gates.reserve(gates.len());
        for g in gates {
            c.push(g)?;
        }
        Ok(c)
    }

    pub fn push(&mut self, gate: Gate) -> Result<()> {
        if let Some(&q) = gate.qubits().iter().find(|&&q| q >= self.n_qubits) {
            return Err(Error::Validation(format!(
                "gate {gate} uses qubit {q} but the circuit has {} qubits",
                self.n_qubits
            )));
        }
        self.gates.push(gate);
        Ok(())
    }

    pub fn extend(&mut self, gates: impl IntoIterator<Item = Gate>) -> Result<()> {
        for g in gates {
            self.push(g)?;
        }
        Ok(())
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    pub fn count(&self, kind: GateKind) -> usize {
        self.gates.iter().filter(|g| g.kind() == kind).count()
    }

    pub fn two_qubit_count(&self) -> usize {
        self.gates.iter().filter(|g| g.is_two_qubit()).count()
    }

    /// Length of the longest chain of two-qubit gates linked through shared
    /// qubits. Single-qubit gates and measurements cost nothing.
    pub fn two_qubit_depth(&self) -> usize {
        let mut level = vec![0usize; self.n_qubits];
        let mut depth = 0;
        for g in self.gates.iter().filter(|g| g.is_two_qubit()) {
            let [a, b] = [g.qubits[0], g.qubits[1]];
            let d = level[a].max(level[b]) + 1;
            level[a] = d;
            level[b] = d;
            depth = depth.max(d);
        }
        depth
    }

    pub fn ends_in_measurement(&self) -> bool {
        let mut measured = vec![false; self.n_qubits];
        for g in self.gates.iter().rev() {
            if g.kind() != GateKind::Measure {
                break;
            }
            measured[g.qubits[0]] = true;
        }
        measured.iter().all(|&m| m)
    }

    /// Gates up to (not including) the trailing measurement layer.
    pub fn without_measurements(&self) -> CircuitIR {
        CircuitIR {
            n_qubits: self.n_qubits,
            gates: self.gates.iter().copied().filter(|g| g.kind() != GateKind::Measure).collect(),
            meta: self.meta.clone(),
        }
    }

    /// Parses the one-gate-per-line dump format. Blank lines and lines
    /// starting with `#` are skipped.
    pub fn parse_dump(n_qubits: usize, text: &str) -> Result<Self> {
        let gates = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(str::parse)
            .collect::<Result<Vec<Gate>>>()?;
        Self::from_gates(n_qubits, gates)
    }
}

impl fmt::Display for CircuitIR {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for g in &self.gates {
            writeln!(f, "{g}")?;
        }
        Ok(())
    }
}

/// FID circuit for `sys` at time `t`.
pub fn build_fid_circuit(
    sys: &SpinSystem,
    t: f64,
    repetitions: usize,
    formula: ProductFormula,
) -> Result<CircuitIR> {
    build_fid_circuit_for(&build_terms(sys), t, repetitions, formula)
}

/// FID circuit for an arbitrary grouped Hamiltonian.
pub fn build_fid_circuit_for(
    h: &PauliHamiltonian,
    t: f64,
    repetitions: usize,
    formula: ProductFormula,
) -> Result<CircuitIR> {
    if repetitions == 0 {
        return Err(Error::Parameter("repetitions must be at least 1".into()));
    }
    if !t.is_finite() {
        return Err(Error::Parameter(format!("evolution time {t} is not finite")));
    }
    let n = h.n_spins();
    let dt = t / repetitions as f64;
    let step = materialize(h, &formula_schedule(formula)?, dt)?;

    let mut gates = Vec::with_capacity(4 * n + repetitions * step.len());
    gates.extend((0..n).map(|q| Gate::ry(q, FRAC_PI_2)));
    for _ in 0..repetitions {
        gates.extend_from_slice(&step);
    }
    gates.extend((0..n).map(|q| Gate::ry(q, -FRAC_PI_2)));
    gates.extend((0..n).map(Gate::measure));

    let mut c = CircuitIR::from_gates(n, gates)?;
    c.meta = CircuitMeta { repetitions, time_s: t, formula: Some(formula) };
    Ok(c)
}

/// Two-qubit gate family of the target device.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NativeBasis {
    Cx,
    #[default]
    Ecr,
}

impl NativeBasis {
    pub fn gate_kind(self) -> GateKind {
        match self {
            NativeBasis::Cx => GateKind::Cx,
            NativeBasis::Ecr => GateKind::Ecr,
        }
    }

    /// Basis of a circuit whose two-qubit gates are all of one native kind.
    pub fn detect(c: &CircuitIR) -> Option<NativeBasis> {
        let mut found = None;
        for g in c.gates().iter().filter(|g| g.is_two_qubit()) {
            let b = match g.kind() {
                GateKind::Cx => NativeBasis::Cx,
                GateKind::Ecr => NativeBasis::Ecr,
                _ => return None,
            };
            match found {
                None => found = Some(b),
                Some(prev) if prev != b => return None,
                _ => {}
            }
        }
        found
    }
}

impl FromStr for NativeBasis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "cx" | "cnot" => Ok(NativeBasis::Cx),
            "ecr" => Ok(NativeBasis::Ecr),
            _ => Err(Error::Parameter(format!("unknown native basis {s:?}"))),
        }
    }
}

impl fmt::Display for NativeBasis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NativeBasis::Cx => "cx",
            NativeBasis::Ecr => "ecr",
        })
    }
}

fn push_cx(out: &mut Vec<Gate>, basis: NativeBasis, control: usize, target: usize) {
    match basis {
        NativeBasis::Cx => out.push(Gate::cx(control, target)),
        // CX ≅ ECR(c,t) followed by X, S on the control and √X on the target
        NativeBasis::Ecr => out.extend([
            Gate::ecr(control, target),
            Gate::rx(control, std::f64::consts::PI),
            Gate::rz(control, FRAC_PI_2),
            Gate::rx(target, FRAC_PI_2),
        ]),
    }
}

fn push_rzz(out: &mut Vec<Gate>, basis: NativeBasis, a: usize, b: usize, theta: f64) {
    push_cx(out, basis, a, b);
    out.push(Gate::rz(b, theta));
    push_cx(out, basis, a, b);
}

/// Rewrites every two-qubit gate into the native basis. Two-qubit Pauli
/// rotations cost two native gates each, SWAP costs three; single-qubit
/// gates pass through unchanged.
pub fn decompose_to_native(c: &CircuitIR, basis: NativeBasis) -> Result<CircuitIR> {
    let mut out = Vec::with_capacity(c.len() * 3);
    for g in c.gates() {
        match g.kind() {
            GateKind::Rz
            | GateKind::Rx
            | GateKind::Ry
            | GateKind::H
            | GateKind::Sx
            | GateKind::Measure => out.push(*g),
            GateKind::Rzz => {
                let [a, b] = g.qubits;
                push_rzz(&mut out, basis, a, b, g.angle);
            }
            GateKind::Rxx => {
                let [a, b] = g.qubits;
                out.extend([Gate::h(a), Gate::h(b)]);
                push_rzz(&mut out, basis, a, b, g.angle);
                out.extend([Gate::h(a), Gate::h(b)]);
            }
            GateKind::Ryy => {
                let [a, b] = g.qubits;
                out.extend([Gate::rx(a, FRAC_PI_2), Gate::rx(b, FRAC_PI_2)]);
                push_rzz(&mut out, basis, a, b, g.angle);
                out.extend([Gate::rx(a, -FRAC_PI_2), Gate::rx(b, -FRAC_PI_2)]);
            }
            GateKind::Cx => {
                let [a, b] = g.qubits;
                push_cx(&mut out, basis, a, b);
            }
            GateKind::Swap => {
                let [a, b] = g.qubits;
                push_cx(&mut out, basis, a, b);
                push_cx(&mut out, basis, b, a);
                push_cx(&mut out, basis, a, b);
            }
            GateKind::Ecr => match basis {
                NativeBasis::Ecr => out.push(*g),
                NativeBasis::Cx => {
                    let [a, b] = g.qubits;
                    out.extend([
                        Gate::cx(a, b),
                        Gate::rz(a, -FRAC_PI_2),
                        Gate::rx(b, -FRAC_PI_2),
                        Gate::rx(a, std::f64::consts::PI),
                    ]);
                }
            },
        }
    }
    let mut decomposed = CircuitIR::from_gates(c.n_qubits(), out)?;
    decomposed.meta = c.meta.clone();
    Ok(decomposed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spin_model::SpinSystem;

    fn kinds(c: &CircuitIR) -> Vec<GateKind> {
        c.gates().iter().map(Gate::kind).collect()
    }

    #[test]
    fn gate_validation() {
        assert!(Gate::new(GateKind::Cx, &[1, 1], None).is_err());
        assert!(Gate::new(GateKind::Cx, &[1], None).is_err());
        assert!(Gate::new(GateKind::Rz, &[0], None).is_err());
        assert!(Gate::new(GateKind::H, &[0], Some(1.0)).is_err());
        assert!(Gate::new(GateKind::Rz, &[0], Some(f64::NAN)).is_err());
        assert_eq!(Gate::new(GateKind::Rzz, &[0, 2], Some(0.5)).unwrap(), Gate::rzz(0, 2, 0.5));
        let mut c = CircuitIR::new(2);
        assert!(c.push(Gate::h(2)).is_err());
    }

    #[test]
    fn two_spin_lie_trotter_sequence() {
        let sys = SpinSystem::from_offsets_hz("p", &[100.0, 300.0], &[(0, 1, 7.0)]).unwrap();
        let c = build_fid_circuit(&sys, 0.01, 1, ProductFormula::LieTrotter).unwrap();
        use GateKind::*;
        assert_eq!(
            kinds(&c),
            vec![Ry, Ry, Rxx, Ryy, Rz, Rz, Rzz, Ry, Ry, Measure, Measure]
        );
        let dt = 0.01;
        let expected_pair = std::f64::consts::PI * 7.0 * dt;
        assert!((c.gates()[2].angle().unwrap() - expected_pair).abs() < 1e-15);
        assert!((c.gates()[4].angle().unwrap() - 2.0 * std::f64::consts::PI * 100.0 * dt).abs() < 1e-12);
        assert!(c.ends_in_measurement());
    }

    #[test]
    fn repetitions_split_time() {
        let sys = SpinSystem::from_offsets_hz("p", &[100.0, 300.0], &[(0, 1, 7.0)]).unwrap();
        let c = build_fid_circuit(&sys, 0.03, 3, ProductFormula::LieTrotter).unwrap();
        assert_eq!(c.count(GateKind::Rxx), 3);
        for g in c.gates().iter().filter(|g| g.kind() == GateKind::Rz) {
            let expected = 2.0 * std::f64::consts::PI * sys.offset_hz(g.qubits()[0]) * 0.01;
            assert!((g.angle().unwrap() - expected).abs() < 1e-12);
        }
        assert_eq!(c.meta.repetitions, 3);
        assert!(build_fid_circuit(&sys, 0.03, 0, ProductFormula::LieTrotter).is_err());
    }

    #[test]
    fn uncoupled_system_has_no_two_qubit_gates() {
        let sys = SpinSystem::from_offsets_hz("z", &[10.0, 20.0, 30.0], &[]).unwrap();
        let c = build_fid_circuit(&sys, 0.1, 2, ProductFormula::LieTrotter).unwrap();
        assert_eq!(c.two_qubit_count(), 0);
    }

    #[test]
    fn suzuki_schedule_shapes() {
        let s2 = formula_schedule(ProductFormula::Suzuki { order: 2 }).unwrap();
        assert_eq!(s2.len(), 7);
        let groups: Vec<_> = s2.iter().map(|l| l.group).collect();
        let mut rev = groups.clone();
        rev.reverse();
        assert_eq!(groups, rev, "palindrome");
        assert_eq!(s2[3].fraction, 1.0);
        assert_eq!(s2[0].fraction, 0.5);

        let s4 = formula_schedule(ProductFormula::Suzuki { order: 4 }).unwrap();
        assert_eq!(s4.len(), 5 * s2.len());
        let s6 = formula_schedule(ProductFormula::Suzuki { order: 6 }).unwrap();
        assert_eq!(s6.len(), 5 * s4.len());

        // every group's fractions sum to one full step
        for schedule in [&s2, &s4, &s6] {
            for g in TermGroup::ORDER {
                let total: f64 =
                    schedule.iter().filter(|l| l.group == g).map(|l| l.fraction).sum();
                assert!((total - 1.0).abs() < 1e-12, "{g:?} sums to {total}");
            }
        }
    }

    #[test]
    fn suzuki_rejects_odd_orders() {
        let h = PauliHamiltonian::new(1, vec![]).unwrap();
        assert!(matches!(suzuki_layers(&h, 0.1, 3), Err(Error::Parameter(_))));
        assert!(matches!(suzuki_layers(&h, 0.1, 0), Err(Error::Parameter(_))));
        assert!(suzuki_layers(&h, 0.1, 4).is_ok());
    }

    #[test]
    fn formula_parsing() {
        assert_eq!("lie".parse::<ProductFormula>().unwrap(), ProductFormula::LieTrotter);
        assert_eq!(
            "suzuki4".parse::<ProductFormula>().unwrap(),
            ProductFormula::Suzuki { order: 4 }
        );
        assert!("suzuki3".parse::<ProductFormula>().is_err());
        assert!("magnus".parse::<ProductFormula>().is_err());
    }

    #[test]
    fn native_counts() {
        let sys = SpinSystem::from_offsets_hz("p", &[100.0, 300.0], &[(0, 1, 7.0)]).unwrap();
        let c = build_fid_circuit(&sys, 0.01, 1, ProductFormula::LieTrotter).unwrap();
        for basis in [NativeBasis::Cx, NativeBasis::Ecr] {
            let n = decompose_to_native(&c, basis).unwrap();
            assert_eq!(n.two_qubit_count(), 6);
            assert_eq!(n.count(basis.gate_kind()), 6);
            assert_eq!(NativeBasis::detect(&n), Some(basis));
        }

        let mut pairs = Vec::new();
        for k in 0..4 {
            for l in (k + 1)..4 {
                pairs.push((k, l, 3.0));
            }
        }
        let full = SpinSystem::from_offsets_hz("k4", &[1.0, 2.0, 3.0, 4.0], &pairs).unwrap();
        let c = build_fid_circuit(&full, 0.01, 1, ProductFormula::LieTrotter).unwrap();
        assert_eq!(decompose_to_native(&c, NativeBasis::Ecr).unwrap().two_qubit_count(), 36);
    }

    #[test]
    fn rzz_decomposition_shape() {
        let c = CircuitIR::from_gates(2, vec![Gate::rzz(0, 1, 0.3)]).unwrap();
        let n = decompose_to_native(&c, NativeBasis::Cx).unwrap();
        assert_eq!(n.gates(), &[Gate::cx(0, 1), Gate::rz(1, 0.3), Gate::cx(0, 1)]);
    }

    #[test]
    fn depth_of_disjoint_and_chained_gates() {
        let c = CircuitIR::from_gates(
            4,
            vec![Gate::cx(0, 1), Gate::cx(2, 3), Gate::h(1), Gate::cx(1, 2), Gate::cx(0, 1)],
        )
        .unwrap();
        assert_eq!(c.two_qubit_depth(), 3);
        assert_eq!(c.two_qubit_count(), 4);
        assert_eq!(CircuitIR::new(3).two_qubit_depth(), 0);
    }

    #[test]
    fn dump_parses_back() {
        let sys = SpinSystem::from_offsets_hz("p", &[100.0, 300.0], &[(0, 1, 7.0)]).unwrap();
        let c = build_fid_circuit(&sys, 0.0123, 2, ProductFormula::Suzuki { order: 2 }).unwrap();
        let text = c.to_string();
        assert!(text.lines().next().unwrap().starts_with("RY 0,"));
        let back = CircuitIR::parse_dump(2, &text).unwrap();
        assert_eq!(back.gates(), c.gates());
        assert!(CircuitIR::parse_dump(2, "RZ 0").is_err());
        assert!(CircuitIR::parse_dump(2, "FOO 0").is_err());
    }
}
