use alloc::vec;
use alloc::vec::Vec;

use super::{encode_gate, CnfError, CnfInstance, Lit};
use crate::circuit::{Circuit, GateType};

/// XORs wider than this are split into a chain of 2-input XORs.
const MAX_DIRECT_XOR: usize = 4;

/// Literals of one Tseitin-encoded circuit copy.
#[derive(Clone, Debug)]
pub struct CopyEncoding {
    /// Literal of every node, indexed by gate id.
    pub nodes: Vec<Lit>,
    /// Literal of every primary output, in output order.
    pub outputs: Vec<Lit>,
}

/// Encodes one copy of `circuit`. `input_lits[j]` is the literal driving
/// primary input `j`; every logic gate gets a fresh variable.
pub fn encode_circuit(
    cnf: &mut CnfInstance,
    circuit: &Circuit,
    input_lits: &[Lit],
) -> Result<CopyEncoding, CnfError> {
    if input_lits.len() != circuit.num_inputs() {
        return Err(CnfError::Dimension {
            expected: circuit.num_inputs(),
            got: input_lits.len(),
        });
    }
    let mut nodes: Vec<Option<Lit>> = vec![None; circuit.len()];
    for (&id, &l) in circuit.inputs().iter().zip(input_lits) {
        nodes[id.index()] = Some(l);
    }
    let mut fanin = Vec::new();
    for &id in circuit.topo_order() {
        let gate = circuit.gate(id);
        if gate.kind == GateType::Input {
            continue;
        }
        fanin.clear();
        fanin.extend(
            gate.fanin
                .iter()
                .map(|f| nodes[f.index()].expect("topological order")),
        );
        nodes[id.index()] = Some(emit_gate(cnf, gate.kind, &fanin)?);
    }
    let nodes: Vec<Lit> = nodes
        .into_iter()
        .map(|l| l.expect("every node encoded"))
        .collect();
    let outputs = circuit.outputs().iter().map(|o| nodes[o.index()]).collect();
    Ok(CopyEncoding { nodes, outputs })
}

/// Fresh output variable plus clauses for `kind(inputs)`.
fn emit_gate(cnf: &mut CnfInstance, kind: GateType, inputs: &[Lit]) -> Result<Lit, CnfError> {
    if matches!(kind, GateType::Xor | GateType::Xnor) && inputs.len() > MAX_DIRECT_XOR {
        let mut acc = inputs[0];
        for &x in &inputs[1..] {
            let z = cnf.new_lit();
            cnf.add_clauses(encode_gate(GateType::Xor, &[acc, x], z)?)?;
            acc = z;
        }
        return Ok(acc.with_polarity(kind == GateType::Xor));
    }
    let z = cnf.new_lit();
    cnf.add_clauses(encode_gate(kind, inputs, z)?)?;
    Ok(z)
}

/// Value of a net during partial evaluation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Signal {
    Const(bool),
    Lit(Lit),
}

/// Encodes a copy in which some primary inputs are constants, folding
/// constants through the logic. Gates whose value is fixed, or that reduce
/// to a single (possibly inverted) literal, cost no variables or clauses.
/// Returns the signal of every primary output.
pub fn encode_constrained_copy(
    cnf: &mut CnfInstance,
    circuit: &Circuit,
    inputs: &[Signal],
) -> Result<Vec<Signal>, CnfError> {
    if inputs.len() != circuit.num_inputs() {
        return Err(CnfError::Dimension {
            expected: circuit.num_inputs(),
            got: inputs.len(),
        });
    }
    let mut nodes: Vec<Signal> = vec![Signal::Const(false); circuit.len()];
    for (&id, &s) in circuit.inputs().iter().zip(inputs) {
        nodes[id.index()] = s;
    }
    let mut fanin = Vec::new();
    for &id in circuit.topo_order() {
        let gate = circuit.gate(id);
        if gate.kind == GateType::Input {
            continue;
        }
        fanin.clear();
        fanin.extend(gate.fanin.iter().map(|f| nodes[f.index()]));
        nodes[id.index()] = fold_gate(cnf, gate.kind, &fanin)?;
    }
    Ok(circuit.outputs().iter().map(|o| nodes[o.index()]).collect())
}

fn fold_gate(cnf: &mut CnfInstance, kind: GateType, ins: &[Signal]) -> Result<Signal, CnfError> {
    match kind {
        GateType::Buf => Ok(ins[0]),
        GateType::Not => Ok(match ins[0] {
            Signal::Const(b) => Signal::Const(!b),
            Signal::Lit(l) => Signal::Lit(!l),
        }),
        GateType::And | GateType::Nand | GateType::Or | GateType::Nor => {
            let conjunctive = matches!(kind, GateType::And | GateType::Nand);
            let inverted = matches!(kind, GateType::Nand | GateType::Nor);
            // Controlling value: 0 for AND-like, 1 for OR-like.
            let ctrl = !conjunctive;
            let mut lits: Vec<Lit> = Vec::with_capacity(ins.len());
            for s in ins {
                match *s {
                    Signal::Const(b) if b == ctrl => return Ok(Signal::Const(ctrl ^ inverted)),
                    Signal::Const(_) => {}
                    Signal::Lit(l) => {
                        if lits.contains(&!l) {
                            return Ok(Signal::Const(ctrl ^ inverted));
                        }
                        if !lits.contains(&l) {
                            lits.push(l);
                        }
                    }
                }
            }
            Ok(match lits.len() {
                0 => Signal::Const(!ctrl ^ inverted),
                1 => Signal::Lit(lits[0].with_polarity(!inverted)),
                _ => {
                    let base = if conjunctive {
                        GateType::And
                    } else {
                        GateType::Or
                    };
                    let z = emit_gate(cnf, base, &lits)?;
                    Signal::Lit(z.with_polarity(!inverted))
                }
            })
        }
        GateType::Xor | GateType::Xnor => {
            let mut invert = kind == GateType::Xnor;
            let mut vars: Vec<Lit> = Vec::with_capacity(ins.len());
            for s in ins {
                match *s {
                    Signal::Const(b) => invert ^= b,
                    Signal::Lit(l) => {
                        invert ^= l.is_negated();
                        let p = l.var().pos();
                        if let Some(i) = vars.iter().position(|&v| v == p) {
                            vars.swap_remove(i);
                        } else {
                            vars.push(p);
                        }
                    }
                }
            }
            Ok(match vars.len() {
                0 => Signal::Const(invert),
                1 => Signal::Lit(vars[0].with_polarity(!invert)),
                _ => {
                    let z = emit_gate(cnf, GateType::Xor, &vars)?;
                    Signal::Lit(z.with_polarity(!invert))
                }
            })
        }
        GateType::Input => unreachable!("inputs are seeded, not folded"),
    }
}
