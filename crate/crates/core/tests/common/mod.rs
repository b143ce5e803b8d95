#![allow(dead_code)]

use relock_core::circuit::{Circuit, CircuitBuilder, GateType};

/// `c = NAND(a, b)`.
pub fn nand2() -> Circuit {
    let mut b = CircuitBuilder::new();
    let a = b.add_input("a").unwrap();
    let bb = b.add_input("b").unwrap();
    let c = b.add_gate("c", GateType::Nand, vec![a, bb]).unwrap();
    b.add_output(c);
    b.build().unwrap()
}

/// `d = first(a, b)`, `c = XOR(d, keyinput0)`.
pub fn toy_locked(first: GateType) -> Circuit {
    let mut b = CircuitBuilder::new();
    let a = b.add_input("a").unwrap();
    let bb = b.add_input("b").unwrap();
    let k = b.add_input("keyinput0").unwrap();
    let d = b.add_gate("d", first, vec![a, bb]).unwrap();
    let c = b.add_gate("c", GateType::Xor, vec![d, k]).unwrap();
    b.add_output(c);
    b.build().unwrap()
}

pub fn same_function(a: &Circuit, b: &Circuit) -> bool {
    a.truth_table().unwrap() == b.truth_table().unwrap()
}
