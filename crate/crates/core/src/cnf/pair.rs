//! The two-copy key-recovery formula and its incremental refinements.

use alloc::vec::Vec;

use super::{
    encode_circuit, encode_constrained_copy, encode_gate, CnfError, CnfInstance, Lit, Signal,
};
use crate::circuit::{Circuit, GateId, GateType};

/// `C(X, K1, Y1) ∧ C(X, K2, Y2)` plus everything added by later DIPs.
///
/// Both copies share the data-input variables `X`; each owns its key and
/// internal variables. The instance only grows.
#[derive(Clone, Debug)]
pub struct AttackInstance<'c> {
    circuit: &'c Circuit,
    data_inputs: Vec<GateId>,
    key_inputs: Vec<GateId>,
    roles: Vec<PinRole>,
    cnf: CnfInstance,
    x: Vec<Lit>,
    k1: Vec<Lit>,
    k2: Vec<Lit>,
    y1: Vec<Lit>,
    y2: Vec<Lit>,
    single_copy_clauses: usize,
    inequality: Option<Lit>,
    dips: usize,
}

/// What drives each primary input of the locked circuit.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum PinRole {
    Data(usize),
    Key(usize),
}

/// Builds the initial two-copy instance for `locked`, whose primary inputs
/// listed in `key_inputs` are the key bits (in key order).
pub fn encode_locked_pair<'c>(
    locked: &'c Circuit,
    key_inputs: &[GateId],
) -> Result<AttackInstance<'c>, CnfError> {
    for (i, k) in key_inputs.iter().enumerate() {
        if k.index() >= locked.len() || locked.kind(*k) != GateType::Input {
            return Err(CnfError::NotAnInput(k.0));
        }
        if key_inputs[..i].contains(k) {
            return Err(CnfError::DuplicateKey(k.0));
        }
    }
    let data_inputs: Vec<GateId> = locked
        .inputs()
        .iter()
        .copied()
        .filter(|i| !key_inputs.contains(i))
        .collect();
    let roles: Vec<PinRole> = locked
        .inputs()
        .iter()
        .map(|pi| match key_inputs.iter().position(|k| k == pi) {
            Some(i) => PinRole::Key(i),
            None => PinRole::Data(data_inputs.iter().position(|d| d == pi).unwrap()),
        })
        .collect();

    let mut cnf = CnfInstance::new();
    let x: Vec<Lit> = data_inputs.iter().map(|_| cnf.new_lit()).collect();
    let k1: Vec<Lit> = key_inputs.iter().map(|_| cnf.new_lit()).collect();
    let k2: Vec<Lit> = key_inputs.iter().map(|_| cnf.new_lit()).collect();

    let pins = |keys: &[Lit]| -> Vec<Lit> {
        roles
            .iter()
            .map(|r| match *r {
                PinRole::Key(i) => keys[i],
                PinRole::Data(i) => x[i],
            })
            .collect()
    };
    let before = cnf.num_clauses();
    let copy1 = encode_circuit(&mut cnf, locked, &pins(&k1))?;
    let single_copy_clauses = cnf.num_clauses() - before;
    let copy2 = encode_circuit(&mut cnf, locked, &pins(&k2))?;

    Ok(AttackInstance {
        circuit: locked,
        key_inputs: key_inputs.to_vec(),
        data_inputs,
        roles,
        cnf,
        x,
        k1,
        k2,
        y1: copy1.outputs,
        y2: copy2.outputs,
        single_copy_clauses,
        inequality: None,
        dips: 0,
    })
}

impl<'c> AttackInstance<'c> {
    pub fn circuit(&self) -> &'c Circuit {
        self.circuit
    }

    pub fn cnf(&self) -> &CnfInstance {
        &self.cnf
    }

    pub fn data_inputs(&self) -> &[GateId] {
        &self.data_inputs
    }

    pub fn key_inputs(&self) -> &[GateId] {
        &self.key_inputs
    }

    pub fn x(&self) -> &[Lit] {
        &self.x
    }

    pub fn k1(&self) -> &[Lit] {
        &self.k1
    }

    pub fn k2(&self) -> &[Lit] {
        &self.k2
    }

    pub fn y1(&self) -> &[Lit] {
        &self.y1
    }

    pub fn y2(&self) -> &[Lit] {
        &self.y2
    }

    /// Clauses of one circuit copy as produced by the initial encoding.
    pub fn single_copy_clauses(&self) -> usize {
        self.single_copy_clauses
    }

    pub fn dip_count(&self) -> usize {
        self.dips
    }

    /// Adds `Y1 ≠ Y2` guarded by a fresh assumption literal `a`:
    /// `d_j ↔ y1_j ⊕ y2_j` for every output and `(¬a ∨ d_1 ∨ … ∨ d_m)`.
    /// Solving under `a` asks for a distinguishing input; solving without it
    /// leaves the constraint inert. Repeated calls return the same literal.
    pub fn add_inequality(&mut self) -> Lit {
        if let Some(a) = self.inequality {
            return a;
        }
        let a = self.cnf.new_lit();
        let mut any = alloc::vec![!a];
        for (&p, &q) in self.y1.iter().zip(&self.y2) {
            if p == q {
                continue;
            }
            let d = self.cnf.new_lit();
            let cs = encode_gate(GateType::Xor, &[p, q], d).expect("2-input xor");
            self.cnf.add_clauses(cs).expect("allocated literals");
            any.push(d);
        }
        self.cnf.add_clause(&any).expect("allocated literals");
        self.inequality = Some(a);
        a
    }

    pub fn inequality(&self) -> Option<Lit> {
        self.inequality
    }

    /// Adds `C(x, K1, y) ∧ C(x, K2, y)`: two copies with the data inputs
    /// fixed to the DIP `x` and the outputs fixed to the oracle response `y`,
    /// sharing the key variables of the original pair. Constant inputs are
    /// folded, so only key-dependent logic is encoded.
    pub fn add_dip_constraint(&mut self, x: &[bool], y: &[bool]) -> Result<(), CnfError> {
        if x.len() != self.data_inputs.len() {
            return Err(CnfError::Dimension {
                expected: self.data_inputs.len(),
                got: x.len(),
            });
        }
        if y.len() != self.circuit.num_outputs() {
            return Err(CnfError::Dimension {
                expected: self.circuit.num_outputs(),
                got: y.len(),
            });
        }
        for keys in [self.k1.clone(), self.k2.clone()] {
            let pins: Vec<Signal> = self
                .roles
                .iter()
                .map(|r| match *r {
                    PinRole::Key(i) => Signal::Lit(keys[i]),
                    PinRole::Data(i) => Signal::Const(x[i]),
                })
                .collect();
            let outs = encode_constrained_copy(&mut self.cnf, self.circuit, &pins)?;
            for (s, &want) in outs.iter().zip(y) {
                match *s {
                    Signal::Const(v) if v == want => {}
                    Signal::Const(_) => self.cnf.add_falsum(),
                    Signal::Lit(l) => self.cnf.add_clause(&[l.with_polarity(want)])?,
                }
            }
        }
        self.dips += 1;
        Ok(())
    }

    /// Projects a model onto `X`.
    pub fn input_of(&self, model: &[bool]) -> Vec<bool> {
        self.x.iter().map(|l| l.eval(model)).collect()
    }

    /// Projects a model onto `K1`.
    pub fn key1_of(&self, model: &[bool]) -> Vec<bool> {
        self.k1.iter().map(|l| l.eval(model)).collect()
    }

    pub fn key2_of(&self, model: &[bool]) -> Vec<bool> {
        self.k2.iter().map(|l| l.eval(model)).collect()
    }

    pub fn output1_of(&self, model: &[bool]) -> Vec<bool> {
        self.y1.iter().map(|l| l.eval(model)).collect()
    }

    pub fn output2_of(&self, model: &[bool]) -> Vec<bool> {
        self.y2.iter().map(|l| l.eval(model)).collect()
    }

    /// Full primary-input pattern of the locked circuit for data `x` and `key`.
    pub fn assemble_inputs(&self, x: &[bool], key: &[bool]) -> Vec<bool> {
        self.roles
            .iter()
            .map(|r| match *r {
                PinRole::Key(i) => key[i],
                PinRole::Data(i) => x[i],
            })
            .collect()
    }
}
