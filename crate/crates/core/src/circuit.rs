//! Circuit units, the repeated full circuit, and gate budgets.
//!
//! Basis convention: qubit 1 is the most significant bit of the
//! computational-basis index. Gates listed first act first on states, so a
//! unit's matrix is the product of its slot matrices taken right to left.

use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::linalg::{SquareMatrix, C64};

/// Largest supported qubit count.
pub const MAX_QUBITS: usize = 7;

/// One gate position inside a circuit unit. Qubits are 1-indexed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum GateSlot {
    Cnot { control: usize, target: usize },
    Rot { qubit: usize },
}

/// Whether a parameter vector covers one unit or the whole circuit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scope {
    Unit,
    Full,
}

/// Flat rotation angles in radians, three per rotation slot in slot order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterVector {
    pub angles: Vec<f64>,
    pub scope: Scope,
}

impl ParameterVector {
    pub fn unit(angles: Vec<f64>) -> Self {
        Self {
            angles,
            scope: Scope::Unit,
        }
    }

    pub fn full(angles: Vec<f64>) -> Self {
        Self {
            angles,
            scope: Scope::Full,
        }
    }

    pub fn len(&self) -> usize {
        self.angles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.angles.is_empty()
    }
}

/// Layout of one circuit unit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CircuitTopology {
    pub n: usize,
    pub name: String,
    pub slots: Vec<GateSlot>,
    /// Allowed (control, target) pairs. `None` means unconstrained.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coupling: Option<Vec<(usize, usize)>>,
}

#[derive(Deserialize)]
struct RawTopology {
    n: usize,
    #[serde(default)]
    name: Option<String>,
    slots: Vec<serde_json::Value>,
    #[serde(default)]
    coupling: Option<Vec<(usize, usize)>>,
}

impl CircuitTopology {
    pub fn new(
        n: usize,
        name: impl Into<String>,
        slots: Vec<GateSlot>,
        coupling: Option<Vec<(usize, usize)>>,
    ) -> Result<Self> {
        let topology = Self {
            n,
            name: name.into(),
            slots,
            coupling,
        };
        topology.validate()?;
        Ok(topology)
    }

    fn validate(&self) -> Result<()> {
        if self.n == 0 || self.n > MAX_QUBITS {
            return Err(Error::InvalidTopology(format!(
                "qubit count {} outside 1..={MAX_QUBITS}",
                self.n
            )));
        }
        let in_range = |q: usize| (1..=self.n).contains(&q);
        if let Some(edges) = &self.coupling {
            for (c, t) in edges {
                if !in_range(*c) || !in_range(*t) || c == t {
                    return Err(Error::InvalidTopology(format!(
                        "coupling edge ({c}, {t}) is invalid for {} qubits",
                        self.n
                    )));
                }
            }
        }
        for (index, slot) in self.slots.iter().enumerate() {
            let bad = |reason: String| Error::InvalidSlot {
                slot: index,
                reason,
            };
            match *slot {
                GateSlot::Rot { qubit } => {
                    if !in_range(qubit) {
                        return Err(bad(format!("qubit {qubit} outside 1..={}", self.n)));
                    }
                }
                GateSlot::Cnot { control, target } => {
                    if !in_range(control) || !in_range(target) {
                        return Err(bad(format!(
                            "cnot ({control}, {target}) outside 1..={}",
                            self.n
                        )));
                    }
                    if control == target {
                        return Err(bad("cnot control equals target".into()));
                    }
                    if let Some(edges) = &self.coupling {
                        let allowed = edges.contains(&(control, target));
                        if !allowed {
                            return Err(bad(format!(
                                "cnot ({control}, {target}) is not an edge of the coupling graph"
                            )));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// Parses the JSON topology format, naming the offending slot on failure.
    pub fn from_json(text: &str) -> Result<Self> {
        let raw: RawTopology =
            serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        let mut slots = Vec::with_capacity(raw.slots.len());
        for (index, value) in raw.slots.into_iter().enumerate() {
            let slot: GateSlot = serde_json::from_value(value).map_err(|e| Error::InvalidSlot {
                slot: index,
                reason: e.to_string(),
            })?;
            slots.push(slot);
        }
        Self::new(raw.n, raw.name.unwrap_or_default(), slots, raw.coupling)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("topology serializes")
    }

    /// SHA-256 over the qubit count and slot list (the name is not hashed).
    pub fn hash(&self) -> String {
        let canonical = serde_json::json!({ "n": self.n, "slots": self.slots });
        let digest = Sha256::digest(canonical.to_string().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn dim(&self) -> usize {
        1 << self.n
    }

    /// Number of units in the full circuit, `2^n`.
    pub fn unit_count(&self) -> usize {
        1 << self.n
    }

    pub fn cnot_count(&self) -> usize {
        self.slots
            .iter()
            .filter(|s| matches!(s, GateSlot::Cnot { .. }))
            .count()
    }

    pub fn rot_count(&self) -> usize {
        self.slots.len() - self.cnot_count()
    }

    pub fn unit_param_len(&self) -> usize {
        3 * self.rot_count()
    }

    pub fn full_param_len(&self) -> usize {
        self.unit_param_len() * self.unit_count()
    }

    pub fn param_len(&self, scope: Scope) -> usize {
        match scope {
            Scope::Unit => self.unit_param_len(),
            Scope::Full => self.full_param_len(),
        }
    }

    pub fn budget(&self) -> GateBudget {
        gate_budget(self.n, self.cnot_count(), self.rot_count())
    }

    /// Builds a unit in which each CNOT is preceded by a block of rotations.
    ///
    /// The rotation budget is split as evenly as possible over the CNOTs
    /// (earlier blocks take the remainder). Each block rotates the CNOT's own
    /// qubits first, the less-rotated one leading, then tops up with the
    /// least-rotated remaining qubits.
    pub fn interleaved(
        n: usize,
        name: impl Into<String>,
        cnots: &[(usize, usize)],
        rotations: usize,
        coupling: Option<Vec<(usize, usize)>>,
    ) -> Result<Self> {
        let mut counts = vec![0usize; n + 1];
        let mut slots = Vec::with_capacity(cnots.len() + rotations);
        let blocks = cnots.len().max(1);
        let (base, extra) = (rotations / blocks, rotations % blocks);
        for k in 0..blocks {
            let size = base + usize::from(k < extra);
            let mut block: Vec<usize> = Vec::with_capacity(size);
            if let Some(&(c, t)) = cnots.get(k) {
                let mut own = [c, t];
                if counts.get(t).copied().unwrap_or(0) < counts.get(c).copied().unwrap_or(0) {
                    own.swap(0, 1);
                }
                for q in own.into_iter().take(size) {
                    block.push(q);
                    if let Some(cnt) = counts.get_mut(q) {
                        *cnt += 1;
                    }
                }
            }
            while block.len() < size {
                let pick = (1..=n)
                    .filter(|q| !block.contains(q) || block.len() >= n)
                    .min_by_key(|q| (counts[*q], *q))
                    .unwrap_or(1);
                block.push(pick);
                counts[pick] += 1;
            }
            slots.extend(block.into_iter().map(|qubit| GateSlot::Rot { qubit }));
            if let Some(&(control, target)) = cnots.get(k) {
                slots.push(GateSlot::Cnot { control, target });
            }
        }
        Self::new(n, name, slots, coupling)
    }
}

impl fmt::Display for CircuitTopology {
    /// Plain-text gate listing of one unit.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let listing: Vec<String> = self
            .slots
            .iter()
            .map(|s| match s {
                GateSlot::Cnot { control, target } => format!("CX({control},{target})"),
                GateSlot::Rot { qubit } => format!("R({qubit})"),
            })
            .collect();
        write!(
            f,
            "{} [n={}, {} CNOT + {} rotations per unit]: {}",
            self.name,
            self.n,
            self.cnot_count(),
            self.rot_count(),
            listing.join(" ")
        )
    }
}

/// Gate counts against the minimal CNOT and rotation requirements.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GateBudget {
    pub n: usize,
    /// ⌈(4^n − 3n − 1)/4⌉, the CNOT lower bound for an arbitrary unitary.
    pub min_cnots_total: u64,
    pub min_cnots_per_unit: u64,
    pub min_rots_per_unit: u64,
    pub chosen_cnots_per_unit: u64,
    pub chosen_rots_per_unit: u64,
    pub total_cnots: u64,
    pub total_rots: u64,
    pub meets_cnot_minimum: bool,
    pub meets_rot_minimum: bool,
}

fn ceil_div(a: u64, b: u64) -> u64 {
    a.div_ceil(b)
}

pub fn min_cnots_per_unit(n: usize) -> u64 {
    let n = n as u64;
    ceil_div(4u64.pow(n as u32) - 3 * n - 1, 1 << (n + 2))
}

pub fn min_rots_per_unit(n: usize) -> u64 {
    ceil_div(1 << n, 3)
}

pub fn gate_budget(n: usize, chosen_cnots: usize, chosen_rots: usize) -> GateBudget {
    let units = 1u64 << n;
    let min_cnots_per_unit = min_cnots_per_unit(n);
    let min_rots_per_unit = min_rots_per_unit(n);
    let pow4 = 4u64.pow(n as u32);
    GateBudget {
        n,
        min_cnots_total: ceil_div(pow4 - 3 * n as u64 - 1, 4),
        min_cnots_per_unit,
        min_rots_per_unit,
        chosen_cnots_per_unit: chosen_cnots as u64,
        chosen_rots_per_unit: chosen_rots as u64,
        total_cnots: units * chosen_cnots as u64,
        total_rots: units * chosen_rots as u64,
        meets_cnot_minimum: chosen_cnots as u64 >= min_cnots_per_unit,
        meets_rot_minimum: chosen_rots as u64 >= min_rots_per_unit,
    }
}

/// Rotation slots per unit used by the presets: `2^(n−1)` three-angle gates.
pub fn preset_rotations(n: usize) -> usize {
    1 << (n - 1)
}

/// `exp(i(φx σx + φy σy + φz σz))` in axis-angle form.
pub fn rotation_gate(phi_x: f64, phi_y: f64, phi_z: f64) -> SquareMatrix {
    let theta = (phi_x * phi_x + phi_y * phi_y + phi_z * phi_z).sqrt();
    if theta == 0.0 {
        return SquareMatrix::identity(2);
    }
    let (s, c) = theta.sin_cos();
    let k = s / theta;
    // cos θ I + i (sin θ / θ) (φ·σ)
    SquareMatrix::from_rows([
        [C64::new(c, k * phi_z), C64::new(k * phi_y, k * phi_x)],
        [C64::new(-k * phi_y, k * phi_x), C64::new(c, -k * phi_z)],
    ])
}

/// 2×2 entries of a rotation gate, row-major.
pub(crate) fn rotation_entries(phi: &[f64]) -> [C64; 4] {
    let m = rotation_gate(phi[0], phi[1], phi[2]);
    [m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]]
}

/// Partial derivatives of the rotation gate with respect to (φx, φy, φz).
pub(crate) fn rotation_derivatives(phi: &[f64]) -> [[C64; 4]; 3] {
    let theta2 = phi[0] * phi[0] + phi[1] * phi[1] + phi[2] * phi[2];
    let theta = theta2.sqrt();
    let (sinc, curv) = if theta < 1e-4 {
        (1.0 - theta2 / 6.0, -1.0 / 3.0 + theta2 / 30.0)
    } else {
        let (s, c) = theta.sin_cos();
        (s / theta, (c - s / theta) / theta2)
    };
    // φ·σ as a 2×2 matrix.
    let dot = [
        C64::new(phi[2], 0.0),
        C64::new(phi[0], -phi[1]),
        C64::new(phi[0], phi[1]),
        C64::new(-phi[2], 0.0),
    ];
    let paulis = [
        [C64::new(0.0, 0.0), C64::new(1.0, 0.0), C64::new(1.0, 0.0), C64::new(0.0, 0.0)],
        [C64::new(0.0, 0.0), C64::new(0.0, -1.0), C64::new(0.0, 1.0), C64::new(0.0, 0.0)],
        [C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(-1.0, 0.0)],
    ];
    let i = C64::new(0.0, 1.0);
    let mut out = [[C64::new(0.0, 0.0); 4]; 3];
    for a in 0..3 {
        for e in 0..4 {
            let identity = if e == 0 || e == 3 { 1.0 } else { 0.0 };
            out[a][e] = -sinc * phi[a] * identity
                + i * sinc * paulis[a][e]
                + i * phi[a] * curv * dot[e];
        }
    }
    out
}

fn qubit_bit(qubit: usize, n: usize) -> Result<usize> {
    if qubit == 0 || qubit > n {
        return Err(Error::InvalidQubit { index: qubit, n });
    }
    Ok(1 << (n - qubit))
}

/// In-place `m ← E(g) · m` for a single-qubit gate on the qubit owning `bit`.
pub(crate) fn apply_single_left(m: &mut SquareMatrix, g: &[C64; 4], bit: usize) {
    let d = m.dim();
    let data = m.as_mut_slice();
    for i0 in (0..d).filter(|i| i & bit == 0) {
        let i1 = i0 | bit;
        for c in 0..d {
            let a = data[i0 * d + c];
            let b = data[i1 * d + c];
            data[i0 * d + c] = g[0] * a + g[1] * b;
            data[i1 * d + c] = g[2] * a + g[3] * b;
        }
    }
}

/// In-place `m ← m · E(g)`.
pub(crate) fn apply_single_right(m: &mut SquareMatrix, g: &[C64; 4], bit: usize) {
    let d = m.dim();
    let data = m.as_mut_slice();
    for r in 0..d {
        let row = &mut data[r * d..(r + 1) * d];
        for j0 in (0..d).filter(|j| j & bit == 0) {
            let j1 = j0 | bit;
            let (a, b) = (row[j0], row[j1]);
            row[j0] = a * g[0] + b * g[2];
            row[j1] = a * g[1] + b * g[3];
        }
    }
}

/// In-place `m ← CNOT · m` (row swap).
pub(crate) fn apply_cnot_left(m: &mut SquareMatrix, control_bit: usize, target_bit: usize) {
    let d = m.dim();
    let data = m.as_mut_slice();
    for i in (0..d).filter(|i| i & control_bit != 0 && i & target_bit == 0) {
        let j = i | target_bit;
        for c in 0..d {
            data.swap(i * d + c, j * d + c);
        }
    }
}

/// In-place `m ← m · CNOT` (column swap).
pub(crate) fn apply_cnot_right(m: &mut SquareMatrix, control_bit: usize, target_bit: usize) {
    let d = m.dim();
    let data = m.as_mut_slice();
    for r in 0..d {
        for i in (0..d).filter(|i| i & control_bit != 0 && i & target_bit == 0) {
            data.swap(r * d + i, r * d + (i | target_bit));
        }
    }
}

/// CNOT on `n` qubits as a permutation matrix.
pub fn cnot_matrix(n: usize, control: usize, target: usize) -> Result<SquareMatrix> {
    let cb = qubit_bit(control, n)?;
    let tb = qubit_bit(target, n)?;
    if cb == tb {
        return Err(Error::InvalidQubit { index: target, n });
    }
    let mut m = SquareMatrix::identity(1 << n);
    apply_cnot_left(&mut m, cb, tb);
    Ok(m)
}

/// Quantum Fourier transform on `n` qubits: entry `(j, k)` is `ω^{jk}/√N`.
pub fn qft_unitary(n: usize) -> Result<SquareMatrix> {
    if !(1..=MAX_QUBITS).contains(&n) {
        return Err(Error::InvalidTopology(format!("qubit count {n} outside 1..={MAX_QUBITS}")));
    }
    let dim = 1usize << n;
    let scale = 1.0 / (dim as f64).sqrt();
    // Reducing jk mod N first keeps the phase argument small and exact.
    Ok(SquareMatrix::from_fn(dim, |j, k| {
        let turn = ((j * k) % dim) as f64 / dim as f64;
        C64::from_polar(scale, 2.0 * std::f64::consts::PI * turn)
    }))
}

/// `I ⊗ … ⊗ gate ⊗ … ⊗ I` with the gate on `qubit`.
pub fn embed_single(gate: &SquareMatrix, qubit: usize, n: usize) -> Result<SquareMatrix> {
    if gate.dim() != 2 {
        return Err(Error::DimensionMismatch {
            left: gate.dim(),
            right: 2,
        });
    }
    let bit = qubit_bit(qubit, n)?;
    let g = [gate[(0, 0)], gate[(0, 1)], gate[(1, 0)], gate[(1, 1)]];
    let mut m = SquareMatrix::identity(1 << n);
    apply_single_left(&mut m, &g, bit);
    Ok(m)
}

/// Resolved slot for fast repeated application.
#[derive(Debug, Clone, Copy)]
pub(crate) enum CompiledSlot {
    Cnot { control_bit: usize, target_bit: usize },
    /// `offset` indexes the slot's first angle within a unit block.
    Rot { bit: usize, offset: usize },
}

pub(crate) fn compile_slots(topology: &CircuitTopology) -> Vec<CompiledSlot> {
    let n = topology.n;
    let mut offset = 0;
    topology
        .slots
        .iter()
        .map(|slot| match *slot {
            GateSlot::Cnot { control, target } => CompiledSlot::Cnot {
                control_bit: 1 << (n - control),
                target_bit: 1 << (n - target),
            },
            GateSlot::Rot { qubit } => {
                let s = CompiledSlot::Rot {
                    bit: 1 << (n - qubit),
                    offset,
                };
                offset += 3;
                s
            }
        })
        .collect()
}

/// Left-applies every unit block, first block first.
pub(crate) fn synthesize<'a>(
    topology: &CircuitTopology,
    blocks: impl Iterator<Item = &'a [f64]>,
) -> SquareMatrix {
    let compiled = compile_slots(topology);
    let mut u = SquareMatrix::identity(topology.dim());
    for block in blocks {
        for slot in &compiled {
            match *slot {
                CompiledSlot::Cnot {
                    control_bit,
                    target_bit,
                } => apply_cnot_left(&mut u, control_bit, target_bit),
                CompiledSlot::Rot { bit, offset } => {
                    let g = rotation_entries(&block[offset..offset + 3]);
                    apply_single_left(&mut u, &g, bit);
                }
            }
        }
    }
    u
}

fn check_params(topology: &CircuitTopology, params: &ParameterVector, scope: Scope) -> Result<()> {
    if params.scope != scope {
        return Err(Error::WrongScope { expected: scope });
    }
    let expected = topology.param_len(scope);
    if params.len() != expected {
        return Err(Error::ParameterLength {
            expected,
            actual: params.len(),
        });
    }
    Ok(())
}

/// Matrix of one circuit unit.
pub fn unit_unitary(topology: &CircuitTopology, params: &ParameterVector) -> Result<SquareMatrix> {
    check_params(topology, params, Scope::Unit)?;
    Ok(synthesize(topology, std::iter::once(params.angles.as_slice())))
}

/// Matrix of the full circuit of `2^n` units, each with its own block of angles.
pub fn circuit_unitary(
    topology: &CircuitTopology,
    params: &ParameterVector,
) -> Result<SquareMatrix> {
    check_params(topology, params, Scope::Full)?;
    let block = topology.unit_param_len();
    if block == 0 {
        let empty: &[f64] = &[];
        return Ok(synthesize(
            topology,
            std::iter::repeat_n(empty, topology.unit_count()),
        ));
    }
    Ok(synthesize(topology, params.angles.chunks(block)))
}

/// Concatenates `2^n` copies of a unit parameter block.
pub fn replicate_params(unit: &ParameterVector, n: usize) -> Result<ParameterVector> {
    if unit.scope != Scope::Unit {
        return Err(Error::WrongScope {
            expected: Scope::Unit,
        });
    }
    Ok(ParameterVector::full(unit.angles.repeat(1 << n)))
}

/// Names accepted by [`preset_topology`].
pub const PRESET_NAMES: &[&str] = &[
    "chain3", "fanout3", "fanin3", "triangle3", "chain4", "ring4", "star4", "chain5", "qx2", "qx4",
];

fn undirected(edges: &[(usize, usize)]) -> Vec<(usize, usize)> {
    edges.iter().flat_map(|&(a, b)| [(a, b), (b, a)]).collect()
}

fn cycle_edges(edges: &[(usize, usize)], count: usize) -> Vec<(usize, usize)> {
    edges.iter().copied().cycle().take(count).collect()
}

/// Reorders CNOTs into layers of qubit-disjoint gates, each layer taken
/// greedily in list order from what remains.
fn brickwork(cnots: &[(usize, usize)]) -> Vec<(usize, usize)> {
    let mut rest = cnots.to_vec();
    let mut out = Vec::with_capacity(rest.len());
    while !rest.is_empty() {
        let mut busy = Vec::new();
        rest.retain(|&(a, b)| {
            if busy.contains(&a) || busy.contains(&b) {
                return true;
            }
            busy.extend([a, b]);
            out.push((a, b));
            false
        });
    }
    out
}

/// Built-in circuit units.
///
/// All presets use the minimal CNOT count per unit (except `triangle3`,
/// which is `chain3` plus one CNOT from qubit 3 to qubit 1) and `2^(n−1)`
/// rotations. CNOTs cycle through the coupling edges in the listed order and
/// are then grouped into brickwork layers of qubit-disjoint gates.
///
/// * `chain3`: 1–2–3, CNOTs (1,2),(2,3)
/// * `fanout3`: qubit 1 controls both others, (1,2),(1,3)
/// * `fanin3`: qubit 3 is the target of both, (1,3),(2,3)
/// * `triangle3`: (1,2),(2,3),(3,1)
/// * `chain4`, `ring4`, `star4`, `chain5`: the named undirected graphs
/// * `qx2`: IBM QX2 directed map 1→2, 1→3, 2→3, 4→3, 4→5, 5→3
/// * `qx4`: IBM QX4 directed map 2→1, 3→1, 3→2, 4→3, 4→5, 3→5
///
/// The QX maps are the published 0-indexed ones shifted by one.
pub fn preset_topology(name: &str) -> Result<CircuitTopology> {
    let (n, edges, directed, cnots): (usize, Vec<(usize, usize)>, bool, Option<usize>) = match name
    {
        "chain3" => (3, vec![(1, 2), (2, 3)], false, None),
        "fanout3" => (3, vec![(1, 2), (1, 3)], false, None),
        "fanin3" => (3, vec![(1, 3), (2, 3)], false, None),
        "triangle3" => (3, vec![(1, 2), (2, 3), (3, 1)], false, Some(3)),
        "chain4" => (4, vec![(1, 2), (2, 3), (3, 4)], false, None),
        "ring4" => (4, vec![(1, 2), (2, 3), (3, 4), (4, 1)], false, None),
        "star4" => (4, vec![(1, 2), (1, 3), (1, 4)], false, None),
        "chain5" => (5, vec![(1, 2), (2, 3), (3, 4), (4, 5)], false, None),
        "qx2" => (
            5,
            vec![(1, 2), (1, 3), (2, 3), (4, 3), (4, 5), (5, 3)],
            true,
            None,
        ),
        "qx4" => (
            5,
            vec![(2, 1), (3, 1), (3, 2), (4, 3), (4, 5), (3, 5)],
            true,
            None,
        ),
        other => return Err(Error::UnknownPreset(other.to_string())),
    };
    let count = cnots.unwrap_or(min_cnots_per_unit(n) as usize);
    let coupling = if directed {
        edges.clone()
    } else {
        undirected(&edges)
    };
    CircuitTopology::interleaved(
        n,
        name,
        &brickwork(&cycle_edges(&edges, count)),
        preset_rotations(n),
        Some(coupling),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{kron, multiply};

    fn max_abs_diff(a: &SquareMatrix, b: &SquareMatrix) -> f64 {
        a.sub(b).unwrap().as_slice().iter().fold(0.0, |m, z| m.max(z.norm()))
    }

    fn sigma(k: usize) -> SquareMatrix {
        let z = C64::new(0.0, 0.0);
        let one = C64::new(1.0, 0.0);
        let i = C64::new(0.0, 1.0);
        match k {
            0 => SquareMatrix::from_rows([[z, one], [one, z]]),
            1 => SquareMatrix::from_rows([[z, -i], [i, z]]),
            _ => SquareMatrix::from_rows([[one, z], [z, -one]]),
        }
    }

    #[test]
    fn rotation_closed_forms() {
        assert_eq!(rotation_gate(0.0, 0.0, 0.0), SquareMatrix::identity(2));
        let r = rotation_gate(std::f64::consts::FRAC_PI_2, 0.0, 0.0);
        assert!(max_abs_diff(&r, &sigma(0).scale(C64::new(0.0, 1.0))) < 1e-15);
        let phi = 0.7;
        let r = rotation_gate(0.0, 0.0, phi);
        let expect = SquareMatrix::diagonal(&[C64::from_polar(1.0, phi), C64::from_polar(1.0, -phi)]);
        assert!(max_abs_diff(&r, &expect) < 1e-15);
    }

    #[test]
    fn rotation_matches_matrix_exponential() {
        let phi = [0.3, -1.1, 0.8];
        let mut h = SquareMatrix::zeros(2);
        for (k, p) in phi.iter().enumerate() {
            h = h.add(&sigma(k).scale(C64::new(*p, 0.0))).unwrap();
        }
        let expect = crate::linalg::expm_hermitian(&h, 1.0).unwrap();
        assert!(max_abs_diff(&rotation_gate(phi[0], phi[1], phi[2]), &expect) < 1e-14);
    }

    #[test]
    fn rotation_derivatives_match_differences() {
        for phi in [[0.3, -1.1, 0.8], [1e-6, 2e-6, -1e-6], [0.0, 0.0, 0.0]] {
            let d = rotation_derivatives(&phi);
            for a in 0..3 {
                let h = 1e-6;
                let mut plus = phi;
                let mut minus = phi;
                plus[a] += h;
                minus[a] -= h;
                let (p, m) = (rotation_entries(&plus), rotation_entries(&minus));
                for e in 0..4 {
                    let fd = (p[e] - m[e]) / (2.0 * h);
                    assert!((fd - d[a][e]).norm() < 1e-8, "phi={phi:?} a={a} e={e}");
                }
            }
        }
    }

    #[test]
    fn cnot_two_qubit_definition() {
        let m = cnot_matrix(2, 1, 2).unwrap();
        // |10> (index 2) and |11> (index 3) swap.
        let one = C64::new(1.0, 0.0);
        for (i, j) in [(0, 0), (1, 1), (2, 3), (3, 2)] {
            assert_eq!(m[(i, j)], one);
        }
        assert_eq!(&m * &m, SquareMatrix::identity(4));
    }

    #[test]
    fn cnot_rejects_bad_indices() {
        assert!(cnot_matrix(3, 0, 1).is_err());
        assert!(cnot_matrix(3, 1, 4).is_err());
        assert!(cnot_matrix(3, 2, 2).is_err());
    }

    #[test]
    fn cnot_embedding_matches_bit_manipulation() {
        // Independent construction: permutation on basis indices.
        for (c, t) in [(1, 2), (2, 1), (1, 3), (3, 2), (2, 3)] {
            let m = cnot_matrix(3, c, t).unwrap();
            for x in 0..8usize {
                let cbit = (x >> (3 - c)) & 1;
                let y = if cbit == 1 { x ^ (1 << (3 - t)) } else { x };
                assert_eq!(m[(y, x)], C64::new(1.0, 0.0));
            }
            assert_eq!(&m * &m, SquareMatrix::identity(8));
        }
        // Adjacent pair equals the kron-composed 2-qubit CNOT.
        let two = cnot_matrix(2, 1, 2).unwrap();
        let i2 = SquareMatrix::identity(2);
        assert_eq!(cnot_matrix(3, 1, 2).unwrap(), kron(&two, &i2));
        assert_eq!(cnot_matrix(3, 2, 3).unwrap(), kron(&i2, &two));
    }

    #[test]
    fn embed_single_convention() {
        assert_eq!(
            embed_single(&SquareMatrix::identity(2), 2, 3).unwrap(),
            SquareMatrix::identity(8)
        );
        let x1 = embed_single(&sigma(0), 1, 2).unwrap();
        assert_eq!(x1, kron(&sigma(0), &SquareMatrix::identity(2)));
        let a = embed_single(&rotation_gate(0.1, 0.2, 0.3), 1, 3).unwrap();
        let b = embed_single(&rotation_gate(-0.4, 0.5, 0.9), 3, 3).unwrap();
        assert!(max_abs_diff(&(&a * &b), &(&b * &a)) < 1e-15);
        assert!(embed_single(&sigma(0), 4, 3).is_err());
    }

    #[test]
    fn unit_unitary_trivial_cases() {
        let rot_only = CircuitTopology::new(2, "r", vec![GateSlot::Rot { qubit: 1 }], None).unwrap();
        let u = unit_unitary(&rot_only, &ParameterVector::unit(vec![0.0; 3])).unwrap();
        assert_eq!(u, SquareMatrix::identity(4));

        let single = CircuitTopology::new(
            2,
            "cx",
            vec![GateSlot::Rot { qubit: 2 }, GateSlot::Cnot { control: 1, target: 2 }],
            None,
        )
        .unwrap();
        let u = unit_unitary(&single, &ParameterVector::unit(vec![0.0; 3])).unwrap();
        assert_eq!(u, cnot_matrix(2, 1, 2).unwrap());
    }

    #[test]
    fn unit_unitary_ordering() {
        // First slot acts first: U = CX · R.
        let t = CircuitTopology::new(
            2,
            "order",
            vec![GateSlot::Rot { qubit: 1 }, GateSlot::Cnot { control: 1, target: 2 }],
            None,
        )
        .unwrap();
        let angles = vec![0.4, -0.2, 1.3];
        let u = unit_unitary(&t, &ParameterVector::unit(angles.clone())).unwrap();
        let r = embed_single(&rotation_gate(angles[0], angles[1], angles[2]), 1, 2).unwrap();
        let expect = multiply(&cnot_matrix(2, 1, 2).unwrap(), &r).unwrap();
        assert!(max_abs_diff(&u, &expect) < 1e-15);
    }

    #[test]
    fn param_length_checks() {
        let t = preset_topology("chain3").unwrap();
        let err = unit_unitary(&t, &ParameterVector::unit(vec![0.0; 5])).unwrap_err();
        assert_eq!(err, Error::ParameterLength { expected: 12, actual: 5 });
        let err = circuit_unitary(&t, &ParameterVector::unit(vec![0.0; 12])).unwrap_err();
        assert_eq!(err, Error::WrongScope { expected: Scope::Full });
        assert!(replicate_params(&ParameterVector::full(vec![0.0; 3]), 3).is_err());
    }

    #[test]
    fn replicated_params_give_unit_power() {
        let t = preset_topology("chain3").unwrap();
        let unit = ParameterVector::unit((0..12).map(|k| 0.37 * k as f64 - 1.0).collect());
        let full = replicate_params(&unit, 3).unwrap();
        assert_eq!(full.len(), 8 * 12);
        assert!(full.angles.chunks(12).all(|b| b == unit.angles.as_slice()));
        let u = unit_unitary(&t, &unit).unwrap();
        let c = circuit_unitary(&t, &full).unwrap();
        assert!(max_abs_diff(&c, &u.pow(8)) < 1e-12);
    }

    #[test]
    fn zero_angle_circuit_is_cnot_product() {
        let t = preset_topology("chain3").unwrap();
        let c = circuit_unitary(&t, &ParameterVector::full(vec![0.0; t.full_param_len()])).unwrap();
        let unit = multiply(&cnot_matrix(3, 2, 3).unwrap(), &cnot_matrix(3, 1, 2).unwrap()).unwrap();
        let mut expect = SquareMatrix::identity(8);
        for _ in 0..8 {
            expect = multiply(&unit, &expect).unwrap();
        }
        assert_eq!(c, expect);
    }

    #[test]
    fn qft_is_unitary_and_maps_zero_to_uniform() {
        let f = qft_unitary(3).unwrap();
        assert!(f.unitarity_deviation() < 1e-14);
        let s = 1.0 / 8f64.sqrt();
        assert!((0..8).all(|i| (f[(i, 0)] - C64::new(s, 0.0)).norm() < 1e-15));
        // The 1-qubit transform is the Hadamard gate.
        let h = qft_unitary(1).unwrap();
        assert!((h[(1, 1)] + C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0)).norm() < 1e-15);
        assert!(qft_unitary(0).is_err());
    }

    #[test]
    fn budget_minima() {
        for (n, per_unit, total_bound, total) in [(3, 2, 14, 16), (4, 4, 61, 64), (5, 8, 252, 256)] {
            let b = gate_budget(n, per_unit as usize, preset_rotations(n));
            assert_eq!(b.min_cnots_per_unit, per_unit);
            assert_eq!(b.min_cnots_total, total_bound);
            assert_eq!(b.total_cnots, total);
            assert!(b.meets_cnot_minimum && b.meets_rot_minimum);
        }
        assert_eq!(min_rots_per_unit(3), 3);
        assert_eq!(min_rots_per_unit(5), 11);
    }

    #[test]
    fn presets_satisfy_invariants() {
        for name in PRESET_NAMES {
            let t = preset_topology(name).unwrap();
            let b = t.budget();
            if *name != "triangle3" {
                assert_eq!(b.chosen_cnots_per_unit, b.min_cnots_per_unit, "{name}");
            }
            assert_eq!(t.rot_count(), preset_rotations(t.n));
            assert!(t.full_param_len() >= 4usize.pow(t.n as u32) - 1);
            // Round-trips through the file format.
            assert_eq!(CircuitTopology::from_json(&t.to_json()).unwrap(), t);
            // Every CNOT is preceded (within the unit) by a rotation on one of its qubits.
            let mut recent = Vec::new();
            for slot in &t.slots {
                match *slot {
                    GateSlot::Rot { qubit } => recent.push(qubit),
                    GateSlot::Cnot { control, target } => {
                        assert!(recent.contains(&control) || recent.contains(&target), "{name}");
                        recent.clear();
                    }
                }
            }
        }
    }

    #[test]
    fn chain3_and_qx2_layouts() {
        let t = preset_topology("chain3").unwrap();
        assert_eq!((t.n, t.cnot_count(), t.rot_count()), (3, 2, 4));
        let cnots: Vec<_> = t
            .slots
            .iter()
            .filter_map(|s| match s {
                GateSlot::Cnot { control, target } => Some((*control, *target)),
                _ => None,
            })
            .collect();
        assert_eq!(cnots, vec![(1, 2), (2, 3)]);
        let ring = preset_topology("ring4").unwrap();
        let cnots: Vec<_> = ring
            .slots
            .iter()
            .filter_map(|s| match s {
                GateSlot::Cnot { control, target } => Some((*control, *target)),
                _ => None,
            })
            .collect();
        assert_eq!(cnots, vec![(1, 2), (3, 4), (2, 3), (4, 1)]);
        let q = preset_topology("qx2").unwrap();
        assert_eq!((q.n, q.cnot_count(), q.rot_count()), (5, 8, 16));
        assert!(preset_topology("nope").is_err());
    }

    #[test]
    fn loader_names_offending_slot() {
        let text = r#"{"n": 3, "name": "bad", "slots": [
            {"kind": "rot", "qubit": 1},
            {"kind": "cnot", "control": 2, "target": 2}
        ]}"#;
        assert!(matches!(
            CircuitTopology::from_json(text),
            Err(Error::InvalidSlot { slot: 1, .. })
        ));
        let text = r#"{"n": 3, "slots": [{"kind": "rot", "qubit": 1}, {"kind": "swap"}]}"#;
        assert!(matches!(
            CircuitTopology::from_json(text),
            Err(Error::InvalidSlot { slot: 1, .. })
        ));
        let text = r#"{"n": 3, "slots": [{"kind": "cnot", "control": 1, "target": 3}],
                       "coupling": [[1, 2]]}"#;
        assert!(matches!(
            CircuitTopology::from_json(text),
            Err(Error::InvalidSlot { slot: 0, .. })
        ));
    }

    #[test]
    fn hash_ignores_name() {
        let a = preset_topology("chain3").unwrap();
        let mut b = a.clone();
        b.name = "renamed".into();
        assert_eq!(a.hash(), b.hash());
        assert_ne!(a.hash(), preset_topology("fanout3").unwrap().hash());
    }
}
