//! Combinational equivalence checking with a SAT miter.

use alloc::string::String;
use alloc::vec::Vec;

use crate::circuit::Circuit;
use crate::circuit::GateType;
use crate::cnf::{encode_circuit, encode_gate, CnfInstance, Lit};
use crate::sat::{sync_backend, Budget, SatBackend, SatError, SolveResult, Solver};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Equivalence {
    Equivalent,
    /// Input pattern, in the first circuit's input order, on which the
    /// outputs differ.
    Different(Vec<bool>),
}

impl Equivalence {
    pub fn is_equivalent(&self) -> bool {
        matches!(self, Equivalence::Equivalent)
    }

    pub fn counterexample(&self) -> Option<&[bool]> {
        match self {
            Equivalence::Different(x) => Some(x),
            Equivalence::Equivalent => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum VerifyError {
    #[error("circuits have {0} and {1} primary inputs")]
    InputCount(usize, usize),
    #[error("circuits have {0} and {1} primary outputs")]
    OutputCount(usize, usize),
    #[error("primary input `{0}` missing from the second circuit")]
    MissingInput(String),
    #[error("primary output `{0}` missing from the second circuit")]
    MissingOutput(String),
    #[error("equivalence check ran out of budget")]
    Timeout,
    #[error(transparent)]
    Sat(#[from] SatError),
}

/// Checks `a ≡ b` with ports matched by name.
pub fn equivalent(a: &Circuit, b: &Circuit) -> Result<Equivalence, VerifyError> {
    equivalent_with(&mut Solver::new(), a, b, &Budget::unlimited())
}

/// Miter check on a caller-supplied, empty backend: both circuits share
/// input variables, each matched output pair feeds an XOR, and the OR of the
/// XORs is asserted. Unsatisfiable means equivalent.
pub fn equivalent_with<B: SatBackend + ?Sized>(
    backend: &mut B,
    a: &Circuit,
    b: &Circuit,
    budget: &Budget<'_>,
) -> Result<Equivalence, VerifyError> {
    if a.num_inputs() != b.num_inputs() {
        return Err(VerifyError::InputCount(a.num_inputs(), b.num_inputs()));
    }
    if a.num_outputs() != b.num_outputs() {
        return Err(VerifyError::OutputCount(a.num_outputs(), b.num_outputs()));
    }
    let mut cnf = CnfInstance::new();
    let x: Vec<Lit> = a.inputs().iter().map(|_| cnf.new_lit()).collect();
    let mut b_pins = Vec::with_capacity(x.len());
    for &pi in b.inputs() {
        let pos = a
            .find(b.name(pi))
            .and_then(|id| a.input_position(id))
            .ok_or_else(|| VerifyError::MissingInput(b.name(pi).into()))?;
        b_pins.push(x[pos]);
    }
    let ya = encode_circuit(&mut cnf, a, &x).expect("input count checked");
    let yb = encode_circuit(&mut cnf, b, &b_pins).expect("input count checked");

    let mut diffs = Vec::new();
    for (j, &oa) in a.outputs().iter().enumerate() {
        let name = a.name(oa);
        let k = b
            .outputs()
            .iter()
            .position(|&ob| b.name(ob) == name)
            .ok_or_else(|| VerifyError::MissingOutput(name.into()))?;
        let (p, q) = (ya.outputs[j], yb.outputs[k]);
        if p == q {
            continue;
        }
        let d = cnf.new_lit();
        cnf.add_clauses(encode_gate(GateType::Xor, &[p, q], d).expect("2-input xor"))
            .expect("allocated");
        diffs.push(d);
    }
    if diffs.is_empty() {
        return Ok(Equivalence::Equivalent);
    }
    cnf.add_clause(&diffs).expect("allocated");

    let mut synced = 0;
    sync_backend(backend, &cnf, &mut synced)?;
    match backend.solve(&[], budget)? {
        SolveResult::Unsat => Ok(Equivalence::Equivalent),
        SolveResult::Sat(m) => Ok(Equivalence::Different(
            x.iter().map(|l| l.eval(&m)).collect(),
        )),
        SolveResult::Timeout { .. } => Err(VerifyError::Timeout),
    }
}
