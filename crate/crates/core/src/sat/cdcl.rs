//! Conflict-driven clause learning with two watched literals, VSIDS-style
//! activities, phase saving, first-UIP learning, Luby restarts and LBD-based
//! learnt-clause reduction. Assumptions are the first decisions of every
//! descent, so solving under an assumption never changes the clause set.

use alloc::vec;
use alloc::vec::Vec;

use super::heap::VarHeap;
use super::{Budget, SatBackend, SatError, SolveResult};
use crate::cnf::{Lit, Var};

const TRUE: u8 = 1;
const FALSE: u8 = 0;
const UNDEF: u8 = 2;
const NO_REASON: u32 = u32::MAX;

const VAR_DECAY: f64 = 0.95;
const RESTART_UNIT: u64 = 100;
const TIME_CHECK_MASK: u64 = 31;

#[derive(Clone, Debug)]
struct ClauseData {
    lits: Vec<Lit>,
    /// 0 for input clauses.
    lbd: u32,
    deleted: bool,
}

#[derive(Clone, Copy, Debug)]
struct Watcher {
    cref: u32,
    blocker: Lit,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SolverStats {
    pub solves: u64,
    pub conflicts: u64,
    pub decisions: u64,
    pub propagations: u64,
    pub restarts: u64,
    pub learnts: u64,
}

enum Search {
    Sat,
    Unsat,
    Restart,
    Timeout,
}

/// Embedded incremental CDCL solver.
#[derive(Clone, Debug)]
pub struct Solver {
    clauses: Vec<ClauseData>,
    learnts: Vec<u32>,
    num_original: usize,
    watches: Vec<Vec<Watcher>>,
    assigns: Vec<u8>,
    level: Vec<u32>,
    reason: Vec<u32>,
    polarity: Vec<bool>,
    activity: Vec<f64>,
    var_inc: f64,
    heap: VarHeap,
    trail: Vec<Lit>,
    trail_lim: Vec<usize>,
    qhead: usize,
    seen: Vec<bool>,
    ok: bool,
    max_learnts: f64,
    stats: SolverStats,
    #[cfg(debug_assertions)]
    originals: Vec<Vec<Lit>>,
}

impl Default for Solver {
    fn default() -> Self {
        Self::new()
    }
}

impl Solver {
    pub fn new() -> Self {
        Solver {
            clauses: Vec::new(),
            learnts: Vec::new(),
            num_original: 0,
            watches: Vec::new(),
            assigns: Vec::new(),
            level: Vec::new(),
            reason: Vec::new(),
            polarity: Vec::new(),
            activity: Vec::new(),
            var_inc: 1.0,
            heap: VarHeap::default(),
            trail: Vec::new(),
            trail_lim: Vec::new(),
            qhead: 0,
            seen: Vec::new(),
            ok: true,
            max_learnts: 2000.0,
            stats: SolverStats::default(),
            #[cfg(debug_assertions)]
            originals: Vec::new(),
        }
    }

    pub fn stats(&self) -> SolverStats {
        SolverStats {
            learnts: self.learnts.len() as u64,
            ..self.stats
        }
    }

    pub fn new_var(&mut self) -> Var {
        let v = self.assigns.len() as u32;
        self.assigns.push(UNDEF);
        self.level.push(0);
        self.reason.push(NO_REASON);
        self.polarity.push(false);
        self.activity.push(0.0);
        self.seen.push(false);
        self.watches.push(Vec::new());
        self.watches.push(Vec::new());
        self.heap.grow(self.assigns.len());
        self.heap.insert(v, &self.activity);
        Var(v)
    }

    /// False once the clause set alone is known to be unsatisfiable.
    pub fn is_consistent(&self) -> bool {
        self.ok
    }

    #[inline]
    fn value(&self, l: Lit) -> u8 {
        let a = self.assigns[l.var().index()];
        if a == UNDEF {
            UNDEF
        } else {
            a ^ l.is_negated() as u8
        }
    }

    #[inline]
    fn decision_level(&self) -> usize {
        self.trail_lim.len()
    }

    fn check_allocated(&self, lits: &[Lit]) -> Result<(), SatError> {
        match lits.iter().find(|l| l.var().index() >= self.assigns.len()) {
            Some(l) => Err(SatError::Unallocated {
                lit: l.to_dimacs(),
                allocated: self.assigns.len(),
            }),
            None => Ok(()),
        }
    }

    fn enqueue(&mut self, p: Lit, reason: u32) {
        let v = p.var().index();
        debug_assert_eq!(self.assigns[v], UNDEF);
        self.assigns[v] = !p.is_negated() as u8;
        self.level[v] = self.decision_level() as u32;
        self.reason[v] = reason;
        self.trail.push(p);
    }

    fn attach(&mut self, cref: u32) {
        let (a, b) = {
            let c = &self.clauses[cref as usize].lits;
            (c[0], c[1])
        };
        self.watches[a.code()].push(Watcher { cref, blocker: b });
        self.watches[b.code()].push(Watcher { cref, blocker: a });
    }

    fn cancel_until(&mut self, level: usize) {
        if self.decision_level() <= level {
            return;
        }
        let start = self.trail_lim[level];
        for i in (start..self.trail.len()).rev() {
            let p = self.trail[i];
            let v = p.var().index();
            self.assigns[v] = UNDEF;
            self.reason[v] = NO_REASON;
            self.polarity[v] = !p.is_negated();
            self.heap.insert(v as u32, &self.activity);
        }
        self.trail.truncate(start);
        self.trail_lim.truncate(level);
        self.qhead = self.trail.len();
    }

    /// Unit propagation; returns a falsified clause on conflict.
    fn propagate(&mut self) -> Option<u32> {
        let mut conflict = None;
        while self.qhead < self.trail.len() {
            let p = self.trail[self.qhead];
            self.qhead += 1;
            self.stats.propagations += 1;
            let false_lit = !p;
            let mut ws = core::mem::take(&mut self.watches[false_lit.code()]);
            let mut i = 0;
            let mut j = 0;
            while i < ws.len() {
                let w = ws[i];
                i += 1;
                if self.value(w.blocker) == TRUE {
                    ws[j] = w;
                    j += 1;
                    continue;
                }
                let cref = w.cref as usize;
                let first = {
                    let lits = &mut self.clauses[cref].lits;
                    if lits[0] == false_lit {
                        lits.swap(0, 1);
                    }
                    lits[0]
                };
                if first != w.blocker && self.value(first) == TRUE {
                    ws[j] = Watcher {
                        cref: w.cref,
                        blocker: first,
                    };
                    j += 1;
                    continue;
                }
                // Look for a replacement watch.
                let len = self.clauses[cref].lits.len();
                let mut moved = false;
                for k in 2..len {
                    let l = self.clauses[cref].lits[k];
                    if self.value(l) != FALSE {
                        self.clauses[cref].lits.swap(1, k);
                        self.watches[l.code()].push(Watcher {
                            cref: w.cref,
                            blocker: first,
                        });
                        moved = true;
                        break;
                    }
                }
                if moved {
                    continue;
                }
                ws[j] = w;
                j += 1;
                if self.value(first) == FALSE {
                    conflict = Some(w.cref);
                    while i < ws.len() {
                        ws[j] = ws[i];
                        j += 1;
                        i += 1;
                    }
                    self.qhead = self.trail.len();
                } else {
                    self.enqueue(first, w.cref);
                }
            }
            ws.truncate(j);
            self.watches[false_lit.code()] = ws;
            if conflict.is_some() {
                break;
            }
        }
        conflict
    }

    fn bump(&mut self, v: usize) {
        self.activity[v] += self.var_inc;
        if self.activity[v] > 1e100 {
            for a in self.activity.iter_mut() {
                *a *= 1e-100;
            }
            self.var_inc *= 1e-100;
        }
        self.heap.bumped(v as u32, &self.activity);
    }

    /// First-UIP conflict analysis. Returns the learnt clause (asserting
    /// literal first, highest remaining level second) and the backjump level.
    fn analyze(&mut self, mut confl: u32) -> (Vec<Lit>, usize) {
        let dl = self.decision_level() as u32;
        let mut learnt: Vec<Lit> = vec![Lit(0)];
        let mut path = 0usize;
        let mut p: Option<Lit> = None;
        let mut index = self.trail.len();
        loop {
            let start = usize::from(p.is_some());
            let len = self.clauses[confl as usize].lits.len();
            for k in start..len {
                let q = self.clauses[confl as usize].lits[k];
                let v = q.var().index();
                if !self.seen[v] && self.level[v] > 0 {
                    self.bump(v);
                    self.seen[v] = true;
                    if self.level[v] >= dl {
                        path += 1;
                    } else {
                        learnt.push(q);
                    }
                }
            }
            loop {
                index -= 1;
                if self.seen[self.trail[index].var().index()] {
                    break;
                }
            }
            let pl = self.trail[index];
            p = Some(pl);
            confl = self.reason[pl.var().index()];
            self.seen[pl.var().index()] = false;
            path -= 1;
            if path == 0 {
                break;
            }
        }
        learnt[0] = !p.unwrap();

        // Drop literals implied by the rest of the clause.
        let original = learnt.clone();
        let mut kept = 1;
        for i in 1..learnt.len() {
            let q = learnt[i];
            let r = self.reason[q.var().index()];
            let redundant = r != NO_REASON
                && self.clauses[r as usize].lits[1..].iter().all(|l| {
                    let v = l.var().index();
                    self.seen[v] || self.level[v] == 0
                });
            if !redundant {
                learnt[kept] = q;
                kept += 1;
            }
        }
        learnt.truncate(kept);
        for l in &original {
            self.seen[l.var().index()] = false;
        }

        let bt = if learnt.len() == 1 {
            0
        } else {
            let mut max_i = 1;
            for i in 2..learnt.len() {
                if self.level[learnt[i].var().index()] > self.level[learnt[max_i].var().index()] {
                    max_i = i;
                }
            }
            learnt.swap(1, max_i);
            self.level[learnt[1].var().index()] as usize
        };
        (learnt, bt)
    }

    fn lbd(&self, lits: &[Lit]) -> u32 {
        let mut levels: Vec<u32> = lits.iter().map(|l| self.level[l.var().index()]).collect();
        levels.sort_unstable();
        levels.dedup();
        levels.len() as u32
    }

    fn locked(&self, cref: u32) -> bool {
        let l0 = self.clauses[cref as usize].lits[0];
        self.reason[l0.var().index()] == cref && self.value(l0) == TRUE
    }

    fn reduce_db(&mut self) {
        let mut order = core::mem::take(&mut self.learnts);
        // Worst first: high LBD, then oldest.
        order.sort_by(|&a, &b| {
            let (ca, cb) = (&self.clauses[a as usize], &self.clauses[b as usize]);
            cb.lbd.cmp(&ca.lbd).then(a.cmp(&b))
        });
        let target = order.len() / 2;
        let mut removed = 0;
        let mut keep = Vec::with_capacity(order.len());
        for cref in order {
            let c = &self.clauses[cref as usize];
            if removed < target && c.lbd > 2 && c.lits.len() > 2 && !self.locked(cref) {
                let c = &mut self.clauses[cref as usize];
                c.deleted = true;
                c.lits = Vec::new();
                removed += 1;
            } else {
                keep.push(cref);
            }
        }
        keep.sort_unstable();
        self.learnts = keep;
        let clauses = &self.clauses;
        for ws in self.watches.iter_mut() {
            ws.retain(|w| !clauses[w.cref as usize].deleted);
        }
        self.max_learnts *= 1.1;
    }

    fn pick_branch(&mut self) -> Option<Lit> {
        while let Some(v) = self.heap.pop(&self.activity) {
            if self.assigns[v as usize] == UNDEF {
                return Some(Lit::new(Var(v), !self.polarity[v as usize]));
            }
        }
        None
    }

    fn search(
        &mut self,
        max_conflicts: u64,
        assumptions: &[Lit],
        budget: &Budget<'_>,
        conflicts_at_start: u64,
    ) -> Search {
        let mut conflicts = 0u64;
        loop {
            if let Some(confl) = self.propagate() {
                self.stats.conflicts += 1;
                conflicts += 1;
                if self.decision_level() == 0 {
                    self.ok = false;
                    return Search::Unsat;
                }
                let (learnt, bt) = self.analyze(confl);
                self.cancel_until(bt);
                if learnt.len() == 1 {
                    self.enqueue(learnt[0], NO_REASON);
                } else {
                    let lbd = self.lbd(&learnt);
                    let cref = self.clauses.len() as u32;
                    let asserting = learnt[0];
                    self.clauses.push(ClauseData {
                        lits: learnt,
                        lbd,
                        deleted: false,
                    });
                    self.attach(cref);
                    self.learnts.push(cref);
                    self.enqueue(asserting, cref);
                }
                self.var_inc /= VAR_DECAY;
                let run = self.stats.conflicts - conflicts_at_start;
                if budget.conflicts_exhausted(run) {
                    return Search::Timeout;
                }
                if run & TIME_CHECK_MASK == 0 && budget.time_exhausted() {
                    return Search::Timeout;
                }
            } else {
                if conflicts >= max_conflicts {
                    self.cancel_until(0);
                    return Search::Restart;
                }
                if self.learnts.len() as f64 >= self.max_learnts + self.trail.len() as f64 {
                    self.reduce_db();
                }
                let mut next = None;
                while self.decision_level() < assumptions.len() {
                    let a = assumptions[self.decision_level()];
                    match self.value(a) {
                        TRUE => self.trail_lim.push(self.trail.len()),
                        FALSE => return Search::Unsat,
                        _ => {
                            next = Some(a);
                            break;
                        }
                    }
                }
                let next = match next {
                    Some(a) => a,
                    None => match self.pick_branch() {
                        Some(l) => l,
                        None => return Search::Sat,
                    },
                };
                self.stats.decisions += 1;
                if self.stats.decisions & 1023 == 0 && budget.time_exhausted() {
                    return Search::Timeout;
                }
                self.trail_lim.push(self.trail.len());
                self.enqueue(next, NO_REASON);
            }
        }
    }

    #[cfg(debug_assertions)]
    fn debug_check_model(&self, model: &[bool], assumptions: &[Lit]) {
        for c in &self.originals {
            assert!(
                c.iter().any(|l| l.eval(model)),
                "model violates an input clause"
            );
        }
        for a in assumptions {
            assert!(a.eval(model), "model violates an assumption");
        }
    }
}

/// Luby sequence with base 2: 1 1 2 1 1 2 4 1 1 2 …
fn luby(mut x: u64) -> u64 {
    let mut size = 1u64;
    let mut seq = 0u32;
    while size < x + 1 {
        seq += 1;
        size = 2 * size + 1;
    }
    while size - 1 != x {
        size = (size - 1) >> 1;
        seq -= 1;
        x %= size;
    }
    1u64 << seq
}

impl SatBackend for Solver {
    fn num_vars(&self) -> usize {
        self.assigns.len()
    }

    fn reserve_vars(&mut self, n: usize) {
        while self.assigns.len() < n {
            self.new_var();
        }
    }

    fn add_clause(&mut self, clause: &[Lit]) -> Result<(), SatError> {
        self.check_allocated(clause)?;
        #[cfg(debug_assertions)]
        self.originals.push(clause.to_vec());
        if !self.ok {
            return Ok(());
        }
        debug_assert_eq!(self.decision_level(), 0);
        let mut lits = clause.to_vec();
        lits.sort_unstable();
        lits.dedup();
        if lits.windows(2).any(|w| w[0] == !w[1]) {
            return Ok(());
        }
        if lits.iter().any(|&l| self.value(l) == TRUE) {
            return Ok(());
        }
        lits.retain(|&l| self.value(l) != FALSE);
        match lits.len() {
            0 => self.ok = false,
            1 => {
                self.enqueue(lits[0], NO_REASON);
                if self.propagate().is_some() {
                    self.ok = false;
                }
            }
            _ => {
                let cref = self.clauses.len() as u32;
                self.clauses.push(ClauseData {
                    lits,
                    lbd: 0,
                    deleted: false,
                });
                self.attach(cref);
                self.num_original += 1;
            }
        }
        Ok(())
    }

    fn solve(&mut self, assumptions: &[Lit], budget: &Budget<'_>) -> Result<SolveResult, SatError> {
        self.check_allocated(assumptions)?;
        self.stats.solves += 1;
        if !self.ok {
            return Ok(SolveResult::Unsat);
        }
        self.max_learnts = self.max_learnts.max(self.num_original as f64 / 3.0);
        let start = self.stats.conflicts;
        let mut round = 0u64;
        let outcome = loop {
            let limit = luby(round) * RESTART_UNIT;
            match self.search(limit, assumptions, budget, start) {
                Search::Restart => {
                    round += 1;
                    self.stats.restarts += 1;
                    if budget.time_exhausted() {
                        break Search::Timeout;
                    }
                }
                other => break other,
            }
        };
        let result = match outcome {
            Search::Sat => {
                let model: Vec<bool> = self.assigns.iter().map(|&a| a == TRUE).collect();
                #[cfg(debug_assertions)]
                self.debug_check_model(&model, assumptions);
                SolveResult::Sat(model)
            }
            Search::Unsat => SolveResult::Unsat,
            Search::Timeout => SolveResult::Timeout {
                elapsed: budget.elapsed(),
            },
            Search::Restart => unreachable!(),
        };
        self.cancel_until(0);
        Ok(result)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lit(d: i64) -> Lit {
        Lit::from_dimacs(d).unwrap()
    }

    fn solver_with(nvars: usize, clauses: &[&[i64]]) -> Solver {
        let mut s = Solver::new();
        s.reserve_vars(nvars);
        for c in clauses {
            let c: Vec<Lit> = c.iter().map(|&d| lit(d)).collect();
            s.add_clause(&c).unwrap();
        }
        s
    }

    #[test]
    fn luby_prefix() {
        let seq: Vec<u64> = (0..15).map(luby).collect();
        assert_eq!(seq, [1, 1, 2, 1, 1, 2, 4, 1, 1, 2, 1, 1, 2, 4, 8]);
    }

    #[test]
    fn empty_is_sat() {
        let mut s = Solver::new();
        assert!(s.solve(&[], &Budget::unlimited()).unwrap().is_sat());
        s.reserve_vars(3);
        match s.solve(&[], &Budget::unlimited()).unwrap() {
            SolveResult::Sat(m) => assert_eq!(m.len(), 3),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn tautology_and_contradiction() {
        let mut s = solver_with(1, &[&[1, -1]]);
        assert!(s.solve(&[], &Budget::unlimited()).unwrap().is_sat());
        s.add_clause(&[lit(1)]).unwrap();
        s.add_clause(&[lit(-1)]).unwrap();
        assert!(s.solve(&[], &Budget::unlimited()).unwrap().is_unsat());
        assert!(!s.is_consistent());
    }

    #[test]
    fn unallocated_rejected() {
        let mut s = Solver::new();
        assert_eq!(
            s.add_clause(&[lit(2)]),
            Err(SatError::Unallocated {
                lit: 2,
                allocated: 0
            })
        );
        assert!(s.solve(&[lit(1)], &Budget::unlimited()).is_err());
    }

    #[test]
    fn assumptions_are_temporary() {
        // (a ∨ b) ∧ (¬a ∨ b) forces b; assuming ¬b is unsat, afterwards still sat
        let mut s = solver_with(2, &[&[1, 2], &[-1, 2]]);
        assert!(s
            .solve(&[lit(-2)], &Budget::unlimited())
            .unwrap()
            .is_unsat());
        assert!(s.is_consistent());
        match s.solve(&[lit(-1)], &Budget::unlimited()).unwrap() {
            SolveResult::Sat(m) => {
                assert!(!m[0]);
                assert!(m[1]);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn pigeonhole_unsat() {
        // 5 pigeons, 4 holes
        let (p, h) = (5usize, 4usize);
        let var = |i: usize, j: usize| (i * h + j + 1) as i64;
        let mut clauses: Vec<Vec<i64>> = Vec::new();
        for i in 0..p {
            clauses.push((0..h).map(|j| var(i, j)).collect());
        }
        for j in 0..h {
            for a in 0..p {
                for b in a + 1..p {
                    clauses.push(vec![-var(a, j), -var(b, j)]);
                }
            }
        }
        let refs: Vec<&[i64]> = clauses.iter().map(|c| c.as_slice()).collect();
        let mut s = solver_with(p * h, &refs);
        assert!(s.solve(&[], &Budget::unlimited()).unwrap().is_unsat());
        assert!(s.stats().conflicts > 0);
    }

    #[test]
    fn conflict_limit_times_out() {
        let (p, h) = (9usize, 8usize);
        let var = |i: usize, j: usize| (i * h + j + 1) as i64;
        let mut clauses: Vec<Vec<i64>> = Vec::new();
        for i in 0..p {
            clauses.push((0..h).map(|j| var(i, j)).collect());
        }
        for j in 0..h {
            for a in 0..p {
                for b in a + 1..p {
                    clauses.push(vec![-var(a, j), -var(b, j)]);
                }
            }
        }
        let refs: Vec<&[i64]> = clauses.iter().map(|c| c.as_slice()).collect();
        let mut s = solver_with(p * h, &refs);
        let budget = Budget::unlimited().with_conflict_limit(50);
        assert!(matches!(
            s.solve(&[], &budget).unwrap(),
            SolveResult::Timeout { .. }
        ));
    }
}
