//! Core algorithms for studying oracle-guided SAT attacks on logic-locked
//! combinational circuits in the presence of reverse-engineering errors.
//!
//! Everything here is `no_std` (with `alloc`): the netlist model and its
//! bit-parallel simulator, Tseitin CNF encoding, an incremental CDCL solver,
//! random XOR/XNOR key-gate locking, the gate-type substitution error model,
//! the DIP-driven key-recovery loop and a miter-based equivalence checker.
//! File formats, subprocess solvers and the experiment harness live in the
//! `relock` crate.
#![no_std]

extern crate alloc;

pub mod attack;
pub mod circuit;
pub mod cnf;
pub mod errors;
pub mod locking;
pub mod sat;
pub mod verify;

pub use attack::{run_attack, AttackOutcome, AttackResult, CircuitOracle, Oracle};
pub use circuit::{Circuit, CircuitBuilder, CircuitError, GateId, GateType};
pub use cnf::{CnfInstance, Lit, Var};
pub use errors::{ErrorScenario, Substitution};
pub use locking::{apply_key, lock, LockRecord};
pub use sat::{Budget, Clock, SatBackend, SolveResult, Solver};
pub use verify::{equivalent, Equivalence};
