//! Seeded random combinational circuits, used by tests and experiments.

use alloc::format;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;

use super::{Circuit, CircuitBuilder, GateId, GateType};

/// Shape parameters for [`random_circuit`].
#[derive(Clone, Copy, Debug)]
pub struct RandomCircuit {
    pub inputs: usize,
    pub gates: usize,
    /// Upper bound on the number of primary outputs.
    pub max_outputs: usize,
    /// Probability that a multi-input gate gets a third fan-in.
    pub wide_gate_prob: f64,
}

impl RandomCircuit {
    pub fn new(inputs: usize, gates: usize) -> Self {
        Self {
            inputs,
            gates,
            max_outputs: 8,
            wide_gate_prob: 0.1,
        }
    }
}

/// Builds a random DAG. Gate types are mostly 2-input; fan-ins favour
/// nodes nobody reads yet, which keeps dangling logic small. Outputs are
/// the unread gates (capped at `max_outputs`, most recent first) plus the
/// last gate.
pub fn random_circuit<R: Rng + ?Sized>(rng: &mut R, shape: RandomCircuit) -> Circuit {
    assert!(shape.inputs >= 1 && shape.gates >= 1);
    let mut b = CircuitBuilder::new();
    let mut nodes: Vec<GateId> = (0..shape.inputs)
        .map(|i| b.add_input(format!("i{i}")).unwrap())
        .collect();
    let mut reads = alloc::vec![0usize; shape.inputs + shape.gates];

    for g in 0..shape.gates {
        let kind = match rng.gen_range(0..20) {
            0 => GateType::Not,
            1 => GateType::Buf,
            n => GateType::TWO_INPUT[n % 6],
        };
        let arity = match kind {
            GateType::Not | GateType::Buf => 1,
            _ if nodes.len() >= 3 && rng.gen_bool(shape.wide_gate_prob) => 3,
            _ => 2,
        };
        let arity = arity.min(nodes.len()).max(1);
        let kind = if arity == 1 && !matches!(kind, GateType::Not | GateType::Buf) {
            GateType::Not
        } else {
            kind
        };
        let mut fanin: Vec<GateId> = Vec::with_capacity(arity);
        let unread: Vec<GateId> = nodes
            .iter()
            .copied()
            .filter(|n| reads[n.index()] == 0)
            .collect();
        while fanin.len() < arity {
            let pick = if !unread.is_empty() && rng.gen_bool(0.5) {
                *unread.choose(rng).unwrap()
            } else {
                *nodes.choose(rng).unwrap()
            };
            if !fanin.contains(&pick) {
                fanin.push(pick);
            }
        }
        for f in &fanin {
            reads[f.index()] += 1;
        }
        let id = b.add_gate(format!("g{g}"), kind, fanin).unwrap();
        nodes.push(id);
    }

    let last = *nodes.last().unwrap();
    let mut outputs: Vec<GateId> = nodes[shape.inputs..]
        .iter()
        .rev()
        .copied()
        .filter(|n| reads[n.index()] == 0 && *n != last)
        .take(shape.max_outputs.saturating_sub(1))
        .collect();
    outputs.insert(0, last);
    outputs.sort();
    for o in outputs {
        b.add_output(o);
    }
    b.build().expect("generated circuit is well formed")
}
