//! Invariants over random circuits, locks and error scenarios.

mod common;

use std::cell::Cell;
use std::collections::HashSet;

use num_bigint::BigUint;
use num_traits::One;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use relock_core::attack::{run_attack, AttackOutcome, CircuitOracle, Oracle};
use relock_core::circuit::{random_circuit, Circuit, GateType, RandomCircuit};
use relock_core::cnf::encode_locked_pair;
use relock_core::errors::{apply_errors, eligible_gates, sample_multi_errors, search_space_size};
use relock_core::locking::{apply_key, key_gate_count, lock};
use relock_core::sat::Budget;
use relock_core::verify::equivalent;

fn circuit(seed: u64, inputs: usize, gates: usize) -> Circuit {
    random_circuit(
        &mut ChaCha8Rng::seed_from_u64(seed),
        RandomCircuit::new(inputs, gates),
    )
}

struct Counting<'a> {
    inner: CircuitOracle<'a>,
    calls: Cell<usize>,
}

impl Oracle for Counting<'_> {
    fn num_inputs(&self) -> usize {
        self.inner.num_inputs()
    }
    fn num_outputs(&self) -> usize {
        self.inner.num_outputs()
    }
    fn query(&self, x: &[bool]) -> Vec<bool> {
        self.calls.set(self.calls.get() + 1);
        self.inner.query(x)
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn correct_key_restores_function(seed in any::<u64>(), m in 1usize..=8, l in 5usize..=60, p in 0.05f64..=1.0) {
        prop_assume!(key_gate_count(p, l) > 0);
        let c = circuit(seed, m, l);
        let (locked, rec) = lock(&c, p, seed ^ 1).unwrap();
        prop_assert_eq!(rec.num_keys(), key_gate_count(p, l));
        prop_assert_eq!(locked.num_gates(), l + rec.num_keys());
        prop_assert_eq!(locked.num_inputs(), m + rec.num_keys());
        let names = |c: &Circuit| c.outputs().iter().map(|&o| c.name(o).to_string()).collect::<Vec<_>>();
        prop_assert_eq!(names(&locked), names(&c));
        let unlocked = apply_key(&locked, &rec.key_input_ids, &rec.correct_key).unwrap();
        prop_assert!(common::same_function(&unlocked, &c));
    }

    #[test]
    fn error_application_only_relabels(seed in any::<u64>(), n in 1usize..=6) {
        let c = circuit(seed, 6, 40);
        let (locked, _) = lock(&c, 0.2, seed).unwrap();
        prop_assume!(n <= eligible_gates(&locked).len());
        for s in sample_multi_errors(&locked, n, 4, seed).unwrap() {
            let e = apply_errors(&locked, &s).unwrap();
            prop_assert_eq!(e.len(), locked.len());
            prop_assert_eq!(e.inputs(), locked.inputs());
            prop_assert_eq!(e.outputs(), locked.outputs());
            let mut changed = 0;
            for id in locked.ids() {
                prop_assert_eq!(e.fanin(id), locked.fanin(id));
                changed += (e.kind(id) != locked.kind(id)) as usize;
            }
            prop_assert_eq!(changed, n);
            prop_assert_eq!(apply_errors(&e, &s.inverse()).unwrap(), locked.clone());
        }
    }

    #[test]
    fn attack_recovers_correct_key_without_errors(seed in any::<u64>(), m in 1usize..=10, l in 10usize..=60) {
        let c = circuit(seed, m, l);
        let (locked, rec) = lock(&c, 0.2, seed).unwrap();
        let oracle = Counting { inner: CircuitOracle::new(&c), calls: Cell::new(0) };
        let r = run_attack(&locked, &rec.key_input_ids, &oracle, &Budget::unlimited()).unwrap();
        let AttackOutcome::KeyFound(key) = &r.outcome else {
            return Err(TestCaseError::fail(format!("{:?}", r.outcome)));
        };
        prop_assert_eq!(key.len(), rec.num_keys());
        let unlocked = apply_key(&locked, &rec.key_input_ids, key).unwrap();
        prop_assert!(common::same_function(&unlocked, &c));
        prop_assert_eq!(oracle.calls.get(), r.iterations());
        prop_assert!(r.iterations() <= 1 << m);
        let distinct: HashSet<&Vec<bool>> = r.dips.iter().map(|d| &d.input).collect();
        prop_assert_eq!(distinct.len(), r.iterations());
        for w in r.dips.windows(2) {
            prop_assert!(w[1].clauses > w[0].clauses);
            prop_assert!(w[1].vars >= w[0].vars);
        }
    }

    #[test]
    fn attack_under_errors_is_well_formed(seed in any::<u64>(), n in 1usize..=4) {
        let c = circuit(seed, 6, 30);
        let (locked, rec) = lock(&c, 0.25, seed).unwrap();
        prop_assume!(n <= eligible_gates(&locked).len());
        let s = &sample_multi_errors(&locked, n, 1, seed).unwrap()[0];
        let bad = apply_errors(&locked, s).unwrap();
        let r = run_attack(&bad, &rec.key_input_ids, &CircuitOracle::new(&c), &Budget::unlimited()).unwrap();
        prop_assert!(r.iterations() <= 1 << 6);
        let distinct: HashSet<&Vec<bool>> = r.dips.iter().map(|d| &d.input).collect();
        prop_assert_eq!(distinct.len(), r.iterations());
        prop_assert!(r.outcome != AttackOutcome::Timeout);
        if let AttackOutcome::KeyFound(k) = &r.outcome {
            // The key must agree with the oracle on every recorded DIP.
            let unlocked = apply_key(&bad, &rec.key_input_ids, k).unwrap();
            for d in &r.dips {
                prop_assert_eq!(&unlocked.simulate(&d.input).unwrap(), &d.response);
            }
        }
    }

    #[test]
    fn dip_constraints_grow_clauses(seed in any::<u64>()) {
        let c = circuit(seed, 5, 25);
        let (locked, rec) = lock(&c, 0.3, seed).unwrap();
        let mut inst = encode_locked_pair(&locked, &rec.key_input_ids).unwrap();
        let t = c.truth_table().unwrap();
        for row in 0..t.num_rows() {
            let (cl, vars) = (inst.cnf().num_clauses(), inst.cnf().num_vars());
            inst.add_dip_constraint(&t.row_inputs(row), &t.row(row)).unwrap();
            prop_assert!(inst.cnf().num_clauses() > cl);
            prop_assert!(inst.cnf().num_vars() >= vars);
        }
    }

    #[test]
    fn miter_agrees_with_truth_tables(seed in any::<u64>(), m in 1usize..=8, mutate in any::<bool>()) {
        let a = circuit(seed, m, 20);
        let b = if mutate {
            let mut b = a.clone();
            let targets = eligible_gates(&b);
            if let Some(&g) = targets.get(seed as usize % targets.len().max(1)) {
                let to = GateType::TWO_INPUT[(seed >> 8) as usize % 6];
                if to != b.kind(g) { b.set_kind(g, to).unwrap(); }
            }
            b
        } else {
            circuit(seed.wrapping_add(1), m, 20)
        };
        prop_assume!(a.num_outputs() == b.num_outputs() || mutate);
        let same_names = a.outputs().iter().all(|&o| b.find(a.name(o)).is_some_and(|x| b.outputs().contains(&x)));
        prop_assume!(same_names);
        let verdict = equivalent(&a, &b).unwrap();
        let brute = common::same_function(&a, &b);
        prop_assert_eq!(verdict.is_equivalent(), brute);
        if let Some(x) = verdict.counterexample() {
            prop_assert_ne!(a.simulate(x).unwrap(), b.simulate(x).unwrap());
        }
    }

    #[test]
    fn search_space_closed_form(l in 1u32..=64, m in 1u32..=8) {
        let closed = BigUint::from(m + 1).pow(l) - BigUint::one();
        prop_assert_eq!(search_space_size(l, m), closed);
    }
}
