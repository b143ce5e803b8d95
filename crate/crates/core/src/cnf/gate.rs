use alloc::vec;
use alloc::vec::Vec;

use super::{Clause, CnfError, Lit};
use crate::circuit::GateType;

/// Tseitin clauses for `output = kind(inputs)`.
///
/// AND/OR/NAND/NOR/XOR/XNOR take one or more inputs (n-ary generalisation);
/// NOT and BUF take exactly one. The 2-input AND, OR, NAND and XOR rows
/// come out in the textbook clause order. XOR over n inputs emits one
/// clause per odd/even input assignment, 2^n in total, so callers should
/// decompose very wide XORs.
pub fn encode_gate(kind: GateType, inputs: &[Lit], output: Lit) -> Result<Vec<Clause>, CnfError> {
    let n = inputs.len();
    let ok = match kind {
        GateType::Input => false,
        GateType::Not | GateType::Buf => n == 1,
        _ => n >= 1,
    };
    if !ok {
        return Err(CnfError::Arity { kind, got: n });
    }
    let z = output;
    let clauses = match kind {
        GateType::And | GateType::Nand => {
            // AND: z -> x_i, (all x_i) -> z. NAND is the same with z negated.
            let z = z.with_polarity(kind == GateType::And);
            let mut cs: Vec<Clause> = inputs.iter().map(|&x| vec![x, !z]).collect();
            let mut big: Clause = inputs.iter().map(|&x| !x).collect();
            big.push(z);
            cs.push(big);
            cs
        }
        GateType::Or | GateType::Nor => {
            let z = z.with_polarity(kind == GateType::Or);
            let mut cs: Vec<Clause> = inputs.iter().map(|&x| vec![!x, z]).collect();
            let mut big: Clause = inputs.to_vec();
            big.push(!z);
            cs.push(big);
            cs
        }
        GateType::Xor | GateType::Xnor => {
            let z = z.with_polarity(kind == GateType::Xor);
            xor_clauses(inputs, z)
        }
        GateType::Not => vec![vec![inputs[0], z], vec![!inputs[0], !z]],
        GateType::Buf => vec![vec![!inputs[0], z], vec![inputs[0], !z]],
        GateType::Input => unreachable!(),
    };
    Ok(clauses)
}

/// Forbids every assignment whose parity disagrees with `z`. Rows with an
/// even number of true inputs come first, so the 2-input case yields
/// (¬x1+¬x2+¬z)(x1+x2+¬z)(¬x1+x2+z)(x1+¬x2+z).
fn xor_clauses(inputs: &[Lit], z: Lit) -> Vec<Clause> {
    let n = inputs.len();
    let mut even = Vec::new();
    let mut odd = Vec::new();
    // Row r sets input i true iff bit (n-1-i) is set; iterate descending so
    // the all-true row leads.
    for r in (0u32..1 << n).rev() {
        let parity = r.count_ones() % 2 == 1;
        let mut clause: Clause = (0..n)
            .map(|i| {
                let set = r >> (n - 1 - i) & 1 == 1;
                inputs[i].with_polarity(!set)
            })
            .collect();
        if parity {
            clause.push(z);
            odd.push(clause);
        } else {
            clause.push(!z);
            even.push(clause);
        }
    }
    even.extend(odd);
    even
}
