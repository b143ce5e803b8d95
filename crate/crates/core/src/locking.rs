//! Random XOR/XNOR key-gate insertion and key application.
//!
//! Polarity convention: an XOR key gate is transparent for key bit 0 and an
//! XNOR key gate for key bit 1, so the correct key is read straight off the
//! placements.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::circuit::{Circuit, CircuitBuilder, CircuitError, GateId, GateType};

/// Name prefix of key inputs in locked netlists.
pub const KEY_INPUT_PREFIX: &str = "keyinput";

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KeyGatePlacement {
    /// Net of the original circuit that was split.
    pub wire: String,
    pub kind: GateType,
    pub key_gate: GateId,
    pub key_input: GateId,
}

/// Ground truth produced by [`lock`].
#[derive(Clone, Debug, PartialEq)]
pub struct LockRecord {
    /// Key primary inputs of the locked circuit, in key-bit order.
    pub key_input_ids: Vec<GateId>,
    pub correct_key: Vec<bool>,
    pub placements: Vec<KeyGatePlacement>,
    pub percent: f64,
    pub seed: u64,
}

impl LockRecord {
    pub fn num_keys(&self) -> usize {
        self.key_input_ids.len()
    }

    /// Removes the key inputs of `locked` using the correct key.
    pub fn unlock(&self, locked: &Circuit) -> Result<Circuit, KeyError> {
        apply_key(locked, &self.key_input_ids, &self.correct_key)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LockError {
    #[error("locking fraction {0} is outside (0, 1]")]
    BadFraction(f64),
    #[error("circuit has no logic gates to lock")]
    NoLogic,
    #[error("{percent} of {gates} gates rounds to zero key gates")]
    ZeroKeyGates { percent: f64, gates: usize },
    #[error("{requested} key gates requested but only {available} wires are eligible")]
    NotEnoughWires { requested: usize, available: usize },
    #[error(transparent)]
    Circuit(#[from] CircuitError),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum KeyError {
    #[error("key has {got} bits, expected {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("gate id {0} is not a primary input")]
    NotAnInput(u32),
    #[error("a constant output needs at least one remaining primary input")]
    NoInputForConstant,
    #[error(transparent)]
    Circuit(#[from] CircuitError),
}

/// `round(fraction × gates)`, half away from zero.
pub fn key_gate_count(fraction: f64, gates: usize) -> usize {
    (fraction * gates as f64 + 0.5) as usize
}

/// Inserts `round(fraction × L)` key gates on distinct, uniformly chosen
/// gate-output wires. Each key gate is XOR or XNOR with equal probability;
/// it takes over the wire's net name (so output names survive) while the
/// original driver is renamed with an `_enc` suffix. Key inputs
/// `keyinput0..` are appended after the existing primary inputs.
pub fn lock(c: &Circuit, fraction: f64, seed: u64) -> Result<(Circuit, LockRecord), LockError> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(LockError::BadFraction(fraction));
    }
    let gates = c.num_gates();
    if gates == 0 {
        return Err(LockError::NoLogic);
    }
    let n = key_gate_count(fraction, gates);
    if n == 0 {
        return Err(LockError::ZeroKeyGates {
            percent: fraction,
            gates,
        });
    }
    let wires: Vec<GateId> = c
        .ids()
        .filter(|&id| c.kind(id) != GateType::Input)
        .collect();
    if wires.len() < n {
        return Err(LockError::NotEnoughWires {
            requested: n,
            available: wires.len(),
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut chosen: Vec<GateId> = index::sample(&mut rng, wires.len(), n)
        .into_iter()
        .map(|i| wires[i])
        .collect();
    chosen.sort();
    let kinds: Vec<GateType> = chosen
        .iter()
        .map(|_| {
            if rng.gen::<bool>() {
                GateType::Xnor
            } else {
                GateType::Xor
            }
        })
        .collect();

    let mut b = c.to_builder();
    let mut key_inputs = Vec::with_capacity(n);
    for i in 0..n {
        let name = b.fresh_name(&format!("{KEY_INPUT_PREFIX}{i}"));
        key_inputs.push(b.add_input(name)?);
    }
    let mut placements = Vec::with_capacity(n);
    for (i, (&wire, &kind)) in chosen.iter().zip(&kinds).enumerate() {
        let net = String::from(c.name(wire));
        let renamed = b.fresh_name(&format!("{net}_enc"));
        b.rename(wire, renamed)?;
        let kg = b.add_gate(net.clone(), kind, vec![wire, key_inputs[i]])?;
        b.redirect_readers(wire, kg);
        placements.push(KeyGatePlacement {
            wire: net,
            kind,
            key_gate: kg,
            key_input: key_inputs[i],
        });
    }
    let locked = b.build()?;
    let record = LockRecord {
        correct_key: kinds.iter().map(|&k| k == GateType::Xnor).collect(),
        key_input_ids: key_inputs,
        placements,
        percent: fraction,
        seed,
    };
    Ok((locked, record))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Node {
    Const(bool),
    Net(GateId),
}

/// Ties the key inputs to constants and propagates them: `XOR(w, 0)`
/// becomes `BUF(w)`, `XOR(w, 1)` becomes `NOT(w)`, a controlling value
/// makes an AND/OR-family gate constant, and so on. Surviving gates keep
/// their names. A primary output that ends up constant is rebuilt as
/// `XOR(x, x)` / `XNOR(x, x)` over the first remaining input.
pub fn apply_key(
    locked: &Circuit,
    key_inputs: &[GateId],
    key: &[bool],
) -> Result<Circuit, KeyError> {
    if key.len() != key_inputs.len() {
        return Err(KeyError::LengthMismatch {
            expected: key_inputs.len(),
            got: key.len(),
        });
    }
    let mut map: Vec<Option<Node>> = vec![None; locked.len()];
    for (&k, &bit) in key_inputs.iter().zip(key) {
        if k.index() >= locked.len() || locked.kind(k) != GateType::Input {
            return Err(KeyError::NotAnInput(k.0));
        }
        map[k.index()] = Some(Node::Const(bit));
    }

    let mut b = CircuitBuilder::new();
    let mut first_input = None;
    for &pi in locked.inputs() {
        if map[pi.index()].is_none() {
            let id = b.add_input(locked.name(pi))?;
            first_input.get_or_insert(id);
            map[pi.index()] = Some(Node::Net(id));
        }
    }

    let mut nets = Vec::new();
    for &id in locked.topo_order() {
        let gate = locked.gate(id);
        if gate.kind == GateType::Input {
            continue;
        }
        let ins: Vec<Node> = gate.fanin.iter().map(|f| map[f.index()].unwrap()).collect();
        let node = match reduce(gate.kind, &ins, &mut nets) {
            Reduced::Const(v) => Node::Const(v),
            Reduced::Gate(kind) => Node::Net(b.add_gate(locked.name(id), kind, nets.clone())?),
        };
        map[id.index()] = Some(node);
    }

    for &o in locked.outputs() {
        let id = match map[o.index()].unwrap() {
            Node::Net(id) => id,
            Node::Const(v) => match b.find(locked.name(o)) {
                Some(id) => id,
                None => {
                    let x = first_input.ok_or(KeyError::NoInputForConstant)?;
                    let kind = if v { GateType::Xnor } else { GateType::Xor };
                    b.add_gate(locked.name(o), kind, vec![x, x])?
                }
            },
        };
        b.add_output(id);
    }
    Ok(b.build()?)
}

enum Reduced {
    Const(bool),
    /// Gate of this kind over the nets left in the scratch vector.
    Gate(GateType),
}

fn reduce(kind: GateType, ins: &[Node], nets: &mut Vec<GateId>) -> Reduced {
    nets.clear();
    match kind {
        GateType::Buf | GateType::Not => match ins[0] {
            Node::Const(v) => Reduced::Const(v ^ (kind == GateType::Not)),
            Node::Net(n) => {
                nets.push(n);
                Reduced::Gate(kind)
            }
        },
        GateType::And | GateType::Nand | GateType::Or | GateType::Nor => {
            let ctrl = matches!(kind, GateType::Or | GateType::Nor);
            let inverted = matches!(kind, GateType::Nand | GateType::Nor);
            for n in ins {
                match *n {
                    Node::Const(v) if v == ctrl => return Reduced::Const(ctrl ^ inverted),
                    Node::Const(_) => {}
                    Node::Net(id) => nets.push(id),
                }
            }
            match nets.len() {
                0 => Reduced::Const(!ctrl ^ inverted),
                1 if nets.len() < ins.len() => Reduced::Gate(if inverted {
                    GateType::Not
                } else {
                    GateType::Buf
                }),
                _ => Reduced::Gate(kind),
            }
        }
        GateType::Xor | GateType::Xnor => {
            let mut invert = kind == GateType::Xnor;
            for n in ins {
                match *n {
                    Node::Const(v) => invert ^= v,
                    Node::Net(id) => nets.push(id),
                }
            }
            match nets.len() {
                0 => Reduced::Const(invert),
                1 => Reduced::Gate(if invert { GateType::Not } else { GateType::Buf }),
                _ => Reduced::Gate(if invert {
                    GateType::Xnor
                } else {
                    GateType::Xor
                }),
            }
        }
        GateType::Input => unreachable!(),
    }
}
