//! Gate-level netlist model.
//!
//! A [`Circuit`] is an immutable combinational DAG. Gate ids are dense and
//! follow construction order, which for parsed netlists is file order. The
//! evaluation order is a separately cached topological order, so ids need
//! not be topologically sorted.

mod generate;
mod sim;

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

pub use generate::{random_circuit, RandomCircuit};
pub use sim::{SimError, TruthTable, MAX_TRUTH_TABLE_INPUTS};

/// Gate function.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GateType {
    Input,
    And,
    Or,
    Nand,
    Nor,
    Xor,
    Xnor,
    Not,
    Buf,
}

impl GateType {
    /// The six 2-input gate types that reverse-engineering can confuse with
    /// one another.
    pub const TWO_INPUT: [GateType; 6] = [
        GateType::And,
        GateType::Or,
        GateType::Nand,
        GateType::Nor,
        GateType::Xor,
        GateType::Xnor,
    ];

    /// Every type that can appear as a logic gate (everything but `Input`).
    pub const LOGIC: [GateType; 8] = [
        GateType::And,
        GateType::Or,
        GateType::Nand,
        GateType::Nor,
        GateType::Xor,
        GateType::Xnor,
        GateType::Not,
        GateType::Buf,
    ];

    /// Upper-case `.bench` keyword.
    pub fn keyword(self) -> &'static str {
        match self {
            GateType::Input => "INPUT",
            GateType::And => "AND",
            GateType::Or => "OR",
            GateType::Nand => "NAND",
            GateType::Nor => "NOR",
            GateType::Xor => "XOR",
            GateType::Xnor => "XNOR",
            GateType::Not => "NOT",
            GateType::Buf => "BUF",
        }
    }

    /// Case-insensitive keyword lookup; `BUFF` is accepted as an alias.
    pub fn from_keyword(s: &str) -> Option<GateType> {
        let t = match s.to_ascii_uppercase().as_str() {
            "INPUT" => GateType::Input,
            "AND" => GateType::And,
            "OR" => GateType::Or,
            "NAND" => GateType::Nand,
            "NOR" => GateType::Nor,
            "XOR" => GateType::Xor,
            "XNOR" => GateType::Xnor,
            "NOT" | "INV" => GateType::Not,
            "BUF" | "BUFF" => GateType::Buf,
            _ => return None,
        };
        Some(t)
    }

    /// Whether a gate of this type may have `n` fan-ins inside a circuit.
    pub fn accepts_fanin(self, n: usize) -> bool {
        match self {
            GateType::Input => n == 0,
            GateType::Not | GateType::Buf => n == 1,
            _ => n >= 2,
        }
    }

    pub fn is_two_input_kind(self) -> bool {
        GateType::TWO_INPUT.contains(&self)
    }

    /// True for the output-inverting members of each family.
    pub fn is_inverting(self) -> bool {
        matches!(
            self,
            GateType::Nand | GateType::Nor | GateType::Xnor | GateType::Not
        )
    }

    /// Boolean semantics over any number of inputs (AND of nothing is 1,
    /// OR/XOR of nothing is 0). `Input` has no function and panics.
    pub fn eval<I: IntoIterator<Item = bool>>(self, inputs: I) -> bool {
        let mut it = inputs.into_iter();
        match self {
            GateType::And => it.all(|b| b),
            GateType::Nand => !it.all(|b| b),
            GateType::Or => it.any(|b| b),
            GateType::Nor => !it.any(|b| b),
            GateType::Xor => it.fold(false, |acc, b| acc ^ b),
            GateType::Xnor => !it.fold(false, |acc, b| acc ^ b),
            GateType::Buf => it.next().unwrap_or(false),
            GateType::Not => !it.next().unwrap_or(false),
            GateType::Input => panic!("INPUT has no gate function"),
        }
    }

    /// Word-parallel evaluation: 64 patterns at once.
    pub fn eval_words<I: IntoIterator<Item = u64>>(self, inputs: I) -> u64 {
        let mut it = inputs.into_iter();
        match self {
            GateType::And => it.fold(!0, |acc, w| acc & w),
            GateType::Nand => !it.fold(!0, |acc, w| acc & w),
            GateType::Or => it.fold(0, |acc, w| acc | w),
            GateType::Nor => !it.fold(0, |acc, w| acc | w),
            GateType::Xor => it.fold(0, |acc, w| acc ^ w),
            GateType::Xnor => !it.fold(0, |acc, w| acc ^ w),
            GateType::Buf => it.next().unwrap_or(0),
            GateType::Not => !it.next().unwrap_or(0),
            GateType::Input => panic!("INPUT has no gate function"),
        }
    }
}

impl fmt::Display for GateType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown gate type `{0}`")]
pub struct UnknownGateType(pub String);

impl FromStr for GateType {
    type Err = UnknownGateType;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        GateType::from_keyword(s).ok_or_else(|| UnknownGateType(s.to_string()))
    }
}

/// Dense index of a gate (or primary input) inside one [`Circuit`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GateId(pub u32);

impl GateId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for GateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Gate {
    pub kind: GateType,
    pub fanin: Vec<GateId>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CircuitError {
    #[error("net `{0}` is defined more than once")]
    DuplicateName(String),
    #[error("gate `{gate}` references undefined gate id {missing}")]
    DanglingFanin { gate: String, missing: u32 },
    #[error("output references undefined gate id {0}")]
    DanglingOutput(u32),
    #[error("gate `{name}` of type {kind} cannot have {fanin} fan-in(s)")]
    Arity {
        name: String,
        kind: GateType,
        fanin: usize,
    },
    #[error("combinational loop through net `{0}`")]
    Cycle(String),
    #[error("no primary outputs declared")]
    NoOutputs,
    #[error("gate id {0} is out of range")]
    OutOfRange(u32),
}

/// Immutable, validated combinational netlist.
#[derive(Clone, Debug)]
pub struct Circuit {
    gates: Vec<Gate>,
    names: Vec<String>,
    by_name: BTreeMap<String, GateId>,
    inputs: Vec<GateId>,
    outputs: Vec<GateId>,
    topo: Vec<GateId>,
}

/// Structural identity: same gates, fan-ins, names and port lists.
impl PartialEq for Circuit {
    fn eq(&self, other: &Self) -> bool {
        self.gates == other.gates
            && self.names == other.names
            && self.inputs == other.inputs
            && self.outputs == other.outputs
    }
}

impl Eq for Circuit {}

impl Circuit {
    /// Total number of nodes, primary inputs included.
    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    /// L: number of logic gates (primary inputs excluded).
    pub fn num_gates(&self) -> usize {
        self.gates.len() - self.inputs.len()
    }

    /// M: number of primary inputs.
    pub fn num_inputs(&self) -> usize {
        self.inputs.len()
    }

    pub fn num_outputs(&self) -> usize {
        self.outputs.len()
    }

    pub fn inputs(&self) -> &[GateId] {
        &self.inputs
    }

    pub fn outputs(&self) -> &[GateId] {
        &self.outputs
    }

    pub fn gate(&self, id: GateId) -> &Gate {
        &self.gates[id.index()]
    }

    pub fn kind(&self, id: GateId) -> GateType {
        self.gates[id.index()].kind
    }

    pub fn fanin(&self, id: GateId) -> &[GateId] {
        &self.gates[id.index()].fanin
    }

    pub fn name(&self, id: GateId) -> &str {
        &self.names[id.index()]
    }

    pub fn find(&self, name: &str) -> Option<GateId> {
        self.by_name.get(name).copied()
    }

    pub fn ids(&self) -> impl Iterator<Item = GateId> + '_ {
        (0..self.gates.len() as u32).map(GateId)
    }

    /// Cached evaluation order: every gate appears after all of its fan-ins.
    pub fn topo_order(&self) -> &[GateId] {
        &self.topo
    }

    /// Position of `id` in the primary-input list.
    pub fn input_position(&self, id: GateId) -> Option<usize> {
        self.inputs.iter().position(|&i| i == id)
    }

    /// Number of readers of every node (gate fan-ins plus output references).
    pub fn fanout_counts(&self) -> Vec<usize> {
        let mut counts = vec![0usize; self.gates.len()];
        for g in &self.gates {
            for f in &g.fanin {
                counts[f.index()] += 1;
            }
        }
        for o in &self.outputs {
            counts[o.index()] += 1;
        }
        counts
    }

    /// Count of logic gates per type.
    pub fn type_histogram(&self) -> BTreeMap<GateType, usize> {
        let mut h = BTreeMap::new();
        for g in &self.gates {
            if g.kind != GateType::Input {
                *h.entry(g.kind).or_insert(0) += 1;
            }
        }
        h
    }

    /// Relabel a gate's type, keeping its connectivity.
    pub fn set_kind(&mut self, id: GateId, kind: GateType) -> Result<(), CircuitError> {
        let gate = self
            .gates
            .get_mut(id.index())
            .ok_or(CircuitError::OutOfRange(id.0))?;
        if gate.kind == GateType::Input
            || kind == GateType::Input
            || !kind.accepts_fanin(gate.fanin.len())
        {
            return Err(CircuitError::Arity {
                name: self.names[id.index()].clone(),
                kind,
                fanin: gate.fanin.len(),
            });
        }
        gate.kind = kind;
        Ok(())
    }

    /// Builder pre-loaded with this circuit, for structural edits.
    pub fn to_builder(&self) -> CircuitBuilder {
        CircuitBuilder {
            gates: self.gates.clone(),
            names: self.names.clone(),
            by_name: self.by_name.clone(),
            outputs: self.outputs.clone(),
        }
    }
}

/// Incremental constructor for [`Circuit`].
///
/// Fan-ins may reference ids that are allocated later (netlists use nets
/// before defining them); everything is checked in [`CircuitBuilder::build`].
#[derive(Clone, Debug, Default)]
pub struct CircuitBuilder {
    gates: Vec<Gate>,
    names: Vec<String>,
    by_name: BTreeMap<String, GateId>,
    outputs: Vec<GateId>,
}

impl CircuitBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    pub fn find(&self, name: &str) -> Option<GateId> {
        self.by_name.get(name).copied()
    }

    pub fn name(&self, id: GateId) -> &str {
        &self.names[id.index()]
    }

    pub fn add_input(&mut self, name: impl Into<String>) -> Result<GateId, CircuitError> {
        self.push(name.into(), GateType::Input, Vec::new())
    }

    pub fn add_gate(
        &mut self,
        name: impl Into<String>,
        kind: GateType,
        fanin: Vec<GateId>,
    ) -> Result<GateId, CircuitError> {
        self.push(name.into(), kind, fanin)
    }

    pub fn add_output(&mut self, id: GateId) {
        self.outputs.push(id);
    }

    /// Picks `base`, or `base_<n>` for the smallest free n.
    pub fn fresh_name(&self, base: &str) -> String {
        if !self.by_name.contains_key(base) {
            return base.into();
        }
        let mut n = 1usize;
        loop {
            let candidate = alloc::format!("{base}_{n}");
            if !self.by_name.contains_key(&candidate) {
                return candidate;
            }
            n += 1;
        }
    }

    pub fn rename(&mut self, id: GateId, name: impl Into<String>) -> Result<(), CircuitError> {
        let name = name.into();
        if self.by_name.contains_key(&name) {
            return Err(CircuitError::DuplicateName(name));
        }
        let old = core::mem::replace(&mut self.names[id.index()], name.clone());
        self.by_name.remove(&old);
        self.by_name.insert(name, id);
        Ok(())
    }

    /// Redirects every reader of `from` (fan-ins and outputs) to `to`,
    /// except the gate `to` itself.
    pub fn redirect_readers(&mut self, from: GateId, to: GateId) {
        for (i, g) in self.gates.iter_mut().enumerate() {
            if i == to.index() {
                continue;
            }
            for f in g.fanin.iter_mut() {
                if *f == from {
                    *f = to;
                }
            }
        }
        for o in self.outputs.iter_mut() {
            if *o == from {
                *o = to;
            }
        }
    }

    fn push(
        &mut self,
        name: String,
        kind: GateType,
        fanin: Vec<GateId>,
    ) -> Result<GateId, CircuitError> {
        if self.by_name.contains_key(&name) {
            return Err(CircuitError::DuplicateName(name));
        }
        let id = GateId(self.gates.len() as u32);
        self.by_name.insert(name.clone(), id);
        self.names.push(name);
        self.gates.push(Gate { kind, fanin });
        Ok(id)
    }

    pub fn build(self) -> Result<Circuit, CircuitError> {
        let n = self.gates.len();
        if self.outputs.is_empty() {
            return Err(CircuitError::NoOutputs);
        }
        for (i, g) in self.gates.iter().enumerate() {
            if !g.kind.accepts_fanin(g.fanin.len()) {
                return Err(CircuitError::Arity {
                    name: self.names[i].clone(),
                    kind: g.kind,
                    fanin: g.fanin.len(),
                });
            }
            if let Some(bad) = g.fanin.iter().find(|f| f.index() >= n) {
                return Err(CircuitError::DanglingFanin {
                    gate: self.names[i].clone(),
                    missing: bad.0,
                });
            }
        }
        if let Some(bad) = self.outputs.iter().find(|o| o.index() >= n) {
            return Err(CircuitError::DanglingOutput(bad.0));
        }

        // Kahn's algorithm; ties broken by id so the order is deterministic.
        let mut indegree: Vec<usize> = self.gates.iter().map(|g| g.fanin.len()).collect();
        let mut readers: Vec<Vec<u32>> = vec![Vec::new(); n];
        for (i, g) in self.gates.iter().enumerate() {
            for f in &g.fanin {
                readers[f.index()].push(i as u32);
            }
        }
        let mut ready: alloc::collections::BinaryHeap<core::cmp::Reverse<u32>> = (0..n as u32)
            .filter(|&i| indegree[i as usize] == 0)
            .map(core::cmp::Reverse)
            .collect();
        let mut topo = Vec::with_capacity(n);
        while let Some(core::cmp::Reverse(i)) = ready.pop() {
            topo.push(GateId(i));
            for &r in &readers[i as usize] {
                indegree[r as usize] -= 1;
                if indegree[r as usize] == 0 {
                    ready.push(core::cmp::Reverse(r));
                }
            }
        }
        if topo.len() != n {
            let stuck = (0..n).find(|&i| indegree[i] > 0).unwrap_or(0);
            return Err(CircuitError::Cycle(self.names[stuck].clone()));
        }

        let inputs = self
            .gates
            .iter()
            .enumerate()
            .filter(|(_, g)| g.kind == GateType::Input)
            .map(|(i, _)| GateId(i as u32))
            .collect();
        Ok(Circuit {
            gates: self.gates,
            names: self.names,
            by_name: self.by_name,
            inputs,
            outputs: self.outputs,
            topo,
        })
    }
}
