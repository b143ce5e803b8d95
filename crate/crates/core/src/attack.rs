//! Oracle-guided key recovery.
//!
//! Starting from two copies of the locked circuit with shared data inputs
//! and independent keys, repeatedly ask the solver for an input on which
//! the two keys disagree, query the oracle on it, and pin both copies to the
//! oracle's answer. Once no disagreeing input remains, any key consistent
//! with the recorded answers is returned.

use alloc::vec::Vec;
use core::time::Duration;

use crate::circuit::{Circuit, GateId, SimError};
use crate::cnf::{encode_locked_pair, AttackInstance, CnfError};
use crate::sat::{sync_backend, Budget, SatBackend, SatError, SolveResult, Solver};

/// Black-box access to the activated circuit.
pub trait Oracle {
    fn num_inputs(&self) -> usize;
    fn num_outputs(&self) -> usize;
    fn query(&self, x: &[bool]) -> Vec<bool>;
}

/// Oracle answering by simulation of a circuit the attack never inspects.
#[derive(Clone, Copy, Debug)]
pub struct CircuitOracle<'a> {
    circuit: &'a Circuit,
}

impl<'a> CircuitOracle<'a> {
    pub fn new(circuit: &'a Circuit) -> Self {
        CircuitOracle { circuit }
    }
}

impl Oracle for CircuitOracle<'_> {
    fn num_inputs(&self) -> usize {
        self.circuit.num_inputs()
    }

    fn num_outputs(&self) -> usize {
        self.circuit.num_outputs()
    }

    fn query(&self, x: &[bool]) -> Vec<bool> {
        self.circuit
            .simulate(x)
            .expect("oracle input width checked by caller")
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum AttackOutcome {
    KeyFound(Vec<bool>),
    /// The recorded oracle answers admit no key at all.
    Unsat,
    Timeout,
}

impl AttackOutcome {
    pub fn key(&self) -> Option<&[bool]> {
        match self {
            AttackOutcome::KeyFound(k) => Some(k),
            _ => None,
        }
    }
}

/// One loop iteration.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Dip {
    pub input: Vec<bool>,
    pub response: Vec<bool>,
    /// Formula size after this DIP's constraints were added.
    pub clauses: usize,
    pub vars: usize,
    /// Time spent in the solve that produced this DIP.
    pub solve_time: Duration,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AttackResult {
    pub outcome: AttackOutcome,
    pub dips: Vec<Dip>,
    /// Solve time of the key-extraction call (zero if never reached).
    pub final_solve_time: Duration,
    pub elapsed: Duration,
}

impl AttackResult {
    pub fn iterations(&self) -> usize {
        self.dips.len()
    }

    /// Unsat without a single DIP: the erroneous netlist is contradictory
    /// on its own.
    pub fn unsat_without_dips(&self) -> bool {
        self.outcome == AttackOutcome::Unsat && self.dips.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AttackError {
    #[error(transparent)]
    Cnf(#[from] CnfError),
    #[error(transparent)]
    Sat(#[from] SatError),
    #[error("oracle has {got_in} inputs / {got_out} outputs, locked circuit expects {want_in} / {want_out}")]
    OracleShape {
        want_in: usize,
        want_out: usize,
        got_in: usize,
        got_out: usize,
    },
    #[error("oracle returned {got} outputs, expected {expected}")]
    OracleResponse { expected: usize, got: usize },
    #[error("solver model does not yield a distinguishing input")]
    SpuriousDip,
    #[error(transparent)]
    Sim(#[from] SimError),
}

/// A distinguishing input together with the two keys and outputs the model
/// assigned to it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DipWitness {
    pub input: Vec<bool>,
    pub key1: Vec<bool>,
    pub key2: Vec<bool>,
    pub output1: Vec<bool>,
    pub output2: Vec<bool>,
}

/// Projects a model of the instance plus inequality and checks by
/// simulation that the two keys really disagree on the projected input.
pub fn classify_dip(inst: &AttackInstance<'_>, model: &[bool]) -> Result<DipWitness, AttackError> {
    let w = DipWitness {
        input: inst.input_of(model),
        key1: inst.key1_of(model),
        key2: inst.key2_of(model),
        output1: inst.output1_of(model),
        output2: inst.output2_of(model),
    };
    let c = inst.circuit();
    let s1 = c.simulate(&inst.assemble_inputs(&w.input, &w.key1))?;
    let s2 = c.simulate(&inst.assemble_inputs(&w.input, &w.key2))?;
    if s1 != w.output1 || s2 != w.output2 || s1 == s2 {
        return Err(AttackError::SpuriousDip);
    }
    Ok(w)
}

/// Runs the attack with the embedded solver.
pub fn run_attack<O: Oracle + ?Sized>(
    locked: &Circuit,
    key_inputs: &[GateId],
    oracle: &O,
    budget: &Budget<'_>,
) -> Result<AttackResult, AttackError> {
    run_attack_with(&mut Solver::new(), locked, key_inputs, oracle, budget)
}

/// Runs the attack on a caller-supplied, empty backend. The budget's
/// deadline covers the whole run; its conflict limit applies per call.
pub fn run_attack_with<B: SatBackend + ?Sized, O: Oracle + ?Sized>(
    backend: &mut B,
    locked: &Circuit,
    key_inputs: &[GateId],
    oracle: &O,
    budget: &Budget<'_>,
) -> Result<AttackResult, AttackError> {
    let start = budget.elapsed();
    let mut inst = encode_locked_pair(locked, key_inputs)?;
    let (want_in, want_out) = (inst.data_inputs().len(), locked.num_outputs());
    if oracle.num_inputs() != want_in || oracle.num_outputs() != want_out {
        return Err(AttackError::OracleShape {
            want_in,
            want_out,
            got_in: oracle.num_inputs(),
            got_out: oracle.num_outputs(),
        });
    }
    let guard = inst.add_inequality();
    let mut synced = 0;
    let mut dips = Vec::new();

    let finish = |outcome, dips, final_solve_time| AttackResult {
        outcome,
        dips,
        final_solve_time,
        elapsed: budget.elapsed().saturating_sub(start),
    };

    loop {
        sync_backend(backend, inst.cnf(), &mut synced)?;
        if budget.time_exhausted() {
            return Ok(finish(AttackOutcome::Timeout, dips, Duration::ZERO));
        }
        let t0 = budget.elapsed();
        let res = backend.solve(&[guard], budget)?;
        let solve_time = budget.elapsed().saturating_sub(t0);
        let model = match res {
            SolveResult::Sat(m) => m,
            SolveResult::Unsat => break,
            SolveResult::Timeout { .. } => {
                return Ok(finish(AttackOutcome::Timeout, dips, Duration::ZERO))
            }
        };
        let w = classify_dip(&inst, &model)?;
        let response = oracle.query(&w.input);
        if response.len() != want_out {
            return Err(AttackError::OracleResponse {
                expected: want_out,
                got: response.len(),
            });
        }
        inst.add_dip_constraint(&w.input, &response)?;
        dips.push(Dip {
            input: w.input,
            response,
            clauses: inst.cnf().num_clauses(),
            vars: inst.cnf().num_vars(),
            solve_time,
        });
    }

    if budget.time_exhausted() {
        return Ok(finish(AttackOutcome::Timeout, dips, Duration::ZERO));
    }
    let t0 = budget.elapsed();
    let res = backend.solve(&[], budget)?;
    let final_time = budget.elapsed().saturating_sub(t0);
    let outcome = match res {
        SolveResult::Sat(m) => AttackOutcome::KeyFound(inst.key1_of(&m)),
        SolveResult::Unsat => AttackOutcome::Unsat,
        SolveResult::Timeout { .. } => AttackOutcome::Timeout,
    };
    Ok(finish(outcome, dips, final_time))
}
