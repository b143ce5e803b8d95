//! SAT solving substrate.
//!
//! [`Solver`] is the embedded incremental CDCL engine. Anything else that
//! can take clauses and answer queries under assumptions (for instance a
//! subprocess solver) plugs in through [`SatBackend`].

mod cdcl;
mod heap;

use alloc::string::String;
use alloc::vec::Vec;
use core::time::Duration;

pub use cdcl::{Solver, SolverStats};

use crate::cnf::{CnfInstance, Lit};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SolveResult {
    /// Total assignment indexed by variable.
    Sat(Vec<bool>),
    Unsat,
    Timeout {
        elapsed: Duration,
    },
}

impl SolveResult {
    pub fn is_sat(&self) -> bool {
        matches!(self, SolveResult::Sat(_))
    }

    pub fn is_unsat(&self) -> bool {
        matches!(self, SolveResult::Unsat)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SatError {
    #[error("literal {lit} references unallocated variable (allocated: {allocated})")]
    Unallocated { lit: i64, allocated: usize },
    #[error("solver backend failed: {0}")]
    Backend(String),
}

/// Monotonic time source. `no_std` code cannot read a clock, so callers
/// supply one; [`NoClock`] never advances.
pub trait Clock {
    fn elapsed(&self) -> Duration;
}

#[derive(Clone, Copy, Debug, Default)]
pub struct NoClock;

impl Clock for NoClock {
    fn elapsed(&self) -> Duration {
        Duration::ZERO
    }
}

/// Resource limits for one or more solver calls.
#[derive(Clone, Copy)]
pub struct Budget<'a> {
    clock: &'a dyn Clock,
    deadline: Option<Duration>,
    max_conflicts: Option<u64>,
}

impl core::fmt::Debug for Budget<'_> {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("Budget")
            .field("elapsed", &self.clock.elapsed())
            .field("deadline", &self.deadline)
            .field("max_conflicts", &self.max_conflicts)
            .finish()
    }
}

static NO_CLOCK: NoClock = NoClock;

impl<'a> Budget<'a> {
    pub fn unlimited() -> Budget<'static> {
        Budget {
            clock: &NO_CLOCK,
            deadline: None,
            max_conflicts: None,
        }
    }

    /// Expires once `clock` reads `deadline` or more.
    pub fn until(clock: &'a dyn Clock, deadline: Option<Duration>) -> Self {
        Budget {
            clock,
            deadline,
            max_conflicts: None,
        }
    }

    /// Additional per-call conflict cap (deterministic, clock-free).
    pub fn with_conflict_limit(mut self, limit: u64) -> Self {
        self.max_conflicts = Some(limit);
        self
    }

    pub fn elapsed(&self) -> Duration {
        self.clock.elapsed()
    }

    pub fn deadline(&self) -> Option<Duration> {
        self.deadline
    }

    pub fn conflict_limit(&self) -> Option<u64> {
        self.max_conflicts
    }

    pub fn time_exhausted(&self) -> bool {
        self.deadline.is_some_and(|d| self.clock.elapsed() >= d)
    }

    pub fn conflicts_exhausted(&self, conflicts: u64) -> bool {
        self.max_conflicts.is_some_and(|m| conflicts >= m)
    }
}

/// Incremental SAT engine: grow-only clauses, queries under assumptions.
pub trait SatBackend {
    fn num_vars(&self) -> usize;

    /// Grows the variable space to at least `n` variables.
    fn reserve_vars(&mut self, n: usize);

    fn add_clause(&mut self, clause: &[Lit]) -> Result<(), SatError>;

    fn solve(&mut self, assumptions: &[Lit], budget: &Budget<'_>) -> Result<SolveResult, SatError>;
}

/// Feeds the clauses of `cnf` added since `*synced` into `backend`.
pub fn sync_backend<B: SatBackend + ?Sized>(
    backend: &mut B,
    cnf: &CnfInstance,
    synced: &mut usize,
) -> Result<(), SatError> {
    backend.reserve_vars(cnf.num_vars());
    for c in cnf.clauses_since(*synced) {
        backend.add_clause(c)?;
    }
    *synced = cnf.num_clauses();
    Ok(())
}

/// Solves a standalone instance with a fresh embedded solver.
pub fn solve_instance(cnf: &CnfInstance, assumptions: &[Lit], budget: &Budget<'_>) -> SolveResult {
    let mut s = Solver::new();
    let mut synced = 0;
    sync_backend(&mut s, cnf, &mut synced).expect("instance literals are allocated");
    s.solve(assumptions, budget)
        .expect("assumptions are allocated")
}
