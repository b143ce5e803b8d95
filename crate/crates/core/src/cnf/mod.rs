//! CNF data types and circuit-to-CNF encoders.

mod encode;
mod gate;
mod pair;

use alloc::vec::Vec;
use core::fmt;
use core::ops::Not;

pub use encode::{encode_circuit, encode_constrained_copy, CopyEncoding, Signal};
pub use gate::encode_gate;
pub use pair::{encode_locked_pair, AttackInstance};

/// Boolean variable, 0-based. DIMACS index is `index + 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var(pub u32);

impl Var {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }

    #[inline]
    pub fn pos(self) -> Lit {
        Lit(self.0 << 1)
    }

    #[inline]
    #[allow(clippy::should_implement_trait)]
    pub fn neg(self) -> Lit {
        Lit(self.0 << 1 | 1)
    }
}

/// Signed variable, packed as `var << 1 | negated`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Lit(pub u32);

impl Lit {
    #[inline]
    pub fn new(var: Var, negated: bool) -> Lit {
        Lit(var.0 << 1 | negated as u32)
    }

    #[inline]
    pub fn var(self) -> Var {
        Var(self.0 >> 1)
    }

    #[inline]
    pub fn is_negated(self) -> bool {
        self.0 & 1 == 1
    }

    #[inline]
    pub fn code(self) -> usize {
        self.0 as usize
    }

    /// `self` if `keep`, otherwise its negation.
    #[inline]
    pub fn with_polarity(self, keep: bool) -> Lit {
        if keep {
            self
        } else {
            !self
        }
    }

    pub fn to_dimacs(self) -> i64 {
        let v = self.var().0 as i64 + 1;
        if self.is_negated() {
            -v
        } else {
            v
        }
    }

    /// `None` for 0.
    pub fn from_dimacs(d: i64) -> Option<Lit> {
        if d == 0 || d.unsigned_abs() > u32::MAX as u64 / 2 {
            return None;
        }
        Some(Lit::new(Var((d.unsigned_abs() - 1) as u32), d < 0))
    }

    /// Value of this literal under a total assignment indexed by variable.
    #[inline]
    pub fn eval(self, model: &[bool]) -> bool {
        model[self.var().index()] ^ self.is_negated()
    }
}

impl Not for Lit {
    type Output = Lit;
    #[inline]
    fn not(self) -> Lit {
        Lit(self.0 ^ 1)
    }
}

impl fmt::Display for Lit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_dimacs())
    }
}

pub type Clause = Vec<Lit>;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CnfError {
    #[error("empty clause")]
    EmptyClause,
    #[error("literal {lit} references unallocated variable (allocated: {allocated})")]
    Unallocated { lit: i64, allocated: usize },
    #[error("{kind} cannot be encoded with {got} input(s)")]
    Arity {
        kind: crate::circuit::GateType,
        got: usize,
    },
    #[error("gate id {0} is not a primary input of the locked circuit")]
    NotAnInput(u32),
    #[error("key input {0} listed twice")]
    DuplicateKey(u32),
    #[error("pattern has {got} bits, expected {expected}")]
    Dimension { expected: usize, got: usize },
}

/// Grow-only clause database with a variable allocator.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CnfInstance {
    num_vars: usize,
    clauses: Vec<Clause>,
}

impl CnfInstance {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn num_clauses(&self) -> usize {
        self.clauses.len()
    }

    pub fn clauses(&self) -> &[Clause] {
        &self.clauses
    }

    pub fn new_var(&mut self) -> Var {
        let v = Var(self.num_vars as u32);
        self.num_vars += 1;
        v
    }

    pub fn new_lit(&mut self) -> Lit {
        self.new_var().pos()
    }

    pub fn add_clause(&mut self, clause: &[Lit]) -> Result<(), CnfError> {
        if clause.is_empty() {
            return Err(CnfError::EmptyClause);
        }
        if let Some(l) = clause.iter().find(|l| l.var().index() >= self.num_vars) {
            return Err(CnfError::Unallocated {
                lit: l.to_dimacs(),
                allocated: self.num_vars,
            });
        }
        self.clauses.push(clause.to_vec());
        Ok(())
    }

    pub fn add_clauses<I: IntoIterator<Item = Clause>>(
        &mut self,
        clauses: I,
    ) -> Result<(), CnfError> {
        for c in clauses {
            self.add_clause(&c)?;
        }
        Ok(())
    }

    /// Records an unconditional contradiction without an empty clause.
    pub fn add_falsum(&mut self) {
        let v = self.new_var();
        self.clauses.push(alloc::vec![v.pos()]);
        self.clauses.push(alloc::vec![v.neg()]);
    }

    /// Whether `model` (indexed by variable) satisfies every clause.
    pub fn is_satisfied_by(&self, model: &[bool]) -> bool {
        model.len() >= self.num_vars && self.clauses.iter().all(|c| c.iter().any(|l| l.eval(model)))
    }

    /// Clauses added since `start` (for incremental solver feeding).
    pub fn clauses_since(&self, start: usize) -> &[Clause] {
        &self.clauses[start.min(self.clauses.len())..]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn literal_packing() {
        let v = Var(4);
        assert_eq!(v.pos().to_dimacs(), 5);
        assert_eq!(v.neg().to_dimacs(), -5);
        assert_eq!(!v.pos(), v.neg());
        assert_eq!(Lit::from_dimacs(-5), Some(v.neg()));
        assert_eq!(Lit::from_dimacs(0), None);
        assert!(v.neg().eval(&[true, true, true, true, false]));
    }

    #[test]
    fn instance_guards() {
        let mut f = CnfInstance::new();
        assert_eq!(f.add_clause(&[]), Err(CnfError::EmptyClause));
        assert!(matches!(
            f.add_clause(&[Var(0).pos()]),
            Err(CnfError::Unallocated {
                lit: 1,
                allocated: 0
            })
        ));
        let x = f.new_lit();
        f.add_clause(&[x, !x]).unwrap();
        assert_eq!(f.num_clauses(), 1);
        assert!(f.is_satisfied_by(&[false]));
        f.add_falsum();
        assert!(!f.is_satisfied_by(&[false, false]));
        assert!(!f.is_satisfied_by(&[false, true]));
        assert_eq!(f.clauses_since(1).len(), 2);
    }
}
