//! Acceptance suite: one pass/fail line per criterion, nonzero exit if any
//! criterion fails. Runs without the libtest harness so every line is
//! printed regardless of outcome.

use std::collections::HashMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use num_bigint::BigUint;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use relock::harness::{
    self, attack_and_classify, to_csv, CampaignResult, ExperimentConfig, Outcome, RunSettings,
};
use relock_core::attack::{run_attack, AttackOutcome, CircuitOracle};
use relock_core::circuit::{
    random_circuit, Circuit, CircuitBuilder, GateId, GateType, RandomCircuit,
};
use relock_core::cnf::{encode_gate, Lit, Var};
use relock_core::errors::{apply_errors, search_space_size, ErrorScenario, Substitution};
use relock_core::locking::{apply_key, lock};
use relock_core::sat::Budget;
use relock_core::verify::equivalent;

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn bench(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("benchmarks")
        .join(format!("{name}.bench"))
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

// Reference semantics, written independently of GateType::eval.
fn reference_gate(kind: GateType, ins: &[bool]) -> bool {
    let ones = ins.iter().filter(|&&b| b).count();
    match kind {
        GateType::And => ones == ins.len(),
        GateType::Nand => ones != ins.len(),
        GateType::Or => ones > 0,
        GateType::Nor => ones == 0,
        GateType::Xor => ones % 2 == 1,
        GateType::Xnor => ones % 2 == 0,
        GateType::Not => !ins[0],
        GateType::Buf => ins[0],
        GateType::Input => unreachable!(),
    }
}

/// Plain per-pattern interpreter used as the exhaustive oracle.
struct Interp<'c> {
    c: &'c Circuit,
    order: Vec<GateId>,
}

impl<'c> Interp<'c> {
    fn new(c: &'c Circuit) -> Self {
        // Own DFS rather than the circuit's cached order.
        fn visit(c: &Circuit, g: GateId, seen: &mut [bool], out: &mut Vec<GateId>) {
            if seen[g.index()] {
                return;
            }
            seen[g.index()] = true;
            for &f in c.fanin(g) {
                visit(c, f, seen, out);
            }
            out.push(g);
        }
        let mut seen = vec![false; c.len()];
        let mut order = Vec::with_capacity(c.len());
        for g in c.ids() {
            visit(c, g, &mut seen, &mut order);
        }
        Interp { c, order }
    }

    /// `inputs` holds one value per primary input, keyed by name.
    fn run(&self, inputs: &HashMap<&str, bool>) -> Vec<(String, bool)> {
        let mut v = vec![false; self.c.len()];
        for &g in &self.order {
            v[g.index()] = match self.c.kind(g) {
                GateType::Input => inputs[self.c.name(g)],
                k => {
                    let ins: Vec<bool> = self.c.fanin(g).iter().map(|f| v[f.index()]).collect();
                    reference_gate(k, &ins)
                }
            };
        }
        let mut outs: Vec<(String, bool)> = self
            .c
            .outputs()
            .iter()
            .map(|&o| (self.c.name(o).to_string(), v[o.index()]))
            .collect();
        outs.sort();
        outs
    }
}

fn pattern<'a>(names: &[&'a str], row: usize) -> HashMap<&'a str, bool> {
    let n = names.len();
    names
        .iter()
        .enumerate()
        .map(|(i, &s)| (s, (row >> (n - 1 - i)) & 1 == 1))
        .collect()
}

fn input_names(c: &Circuit) -> Vec<&str> {
    c.inputs().iter().map(|&i| c.name(i)).collect()
}

/// Exhaustive name-aligned comparison; returns the first differing row.
fn exhaustive_difference(a: &Circuit, b: &Circuit) -> Option<usize> {
    let names = input_names(a);
    let (ia, ib) = (Interp::new(a), Interp::new(b));
    (0..1usize << names.len()).find(|&row| {
        let p = pattern(&names, row);
        ia.run(&p) != ib.run(&p)
    })
}

// ---------------------------------------------------------------- 1

fn toy_original() -> Circuit {
    let mut b = CircuitBuilder::new();
    let a = b.add_input("a").unwrap();
    let bb = b.add_input("b").unwrap();
    let c = b.add_gate("c", GateType::Nand, vec![a, bb]).unwrap();
    b.add_output(c);
    b.build().unwrap()
}

fn toy_locked() -> Circuit {
    let mut b = CircuitBuilder::new();
    let a = b.add_input("a").unwrap();
    let bb = b.add_input("b").unwrap();
    let k = b.add_input("keyinput0").unwrap();
    let d = b.add_gate("d", GateType::And, vec![a, bb]).unwrap();
    let c = b.add_gate("c", GateType::Xor, vec![d, k]).unwrap();
    b.add_output(c);
    b.build().unwrap()
}

fn toy_with_error(observed: GateType) -> Circuit {
    let locked = toy_locked();
    let d = locked.find("d").unwrap();
    let s = ErrorScenario::new(vec![Substitution {
        gate: d,
        original: GateType::And,
        observed,
    }]);
    apply_errors(&locked, &s).unwrap()
}

fn criterion_1() -> Check {
    let start = Instant::now();
    let original = toy_original();
    let oracle = CircuitOracle::new(&original);
    let budget = Budget::unlimited();
    let mut parts = Vec::new();
    let mut failures = Vec::new();

    // (a) no error
    let locked = toy_locked();
    let keys = [locked.find("keyinput0").unwrap()];
    let r = run_attack(&locked, &keys, &oracle, &budget).unwrap();
    let a_ok = match &r.outcome {
        AttackOutcome::KeyFound(k) => {
            r.iterations() == 1
                && r.dips[0].input == [false, false]
                && r.dips[0].response == [true]
                && exhaustive_difference(&apply_key(&locked, &keys, k).unwrap(), &original)
                    .is_none()
        }
        _ => false,
    };
    parts.push(format!(
        "(a) {:?} after {} DIP(s)",
        r.outcome,
        r.iterations()
    ));
    if !a_ok {
        failures.push("(a)");
    }

    // (b)-(d) one error on the AND gate
    let expected = [
        ('b', GateType::Nand, Outcome::Success),
        ('c', GateType::Or, Outcome::FailWrongKey),
        ('d', GateType::Xor, Outcome::FailUnsat),
    ];
    for (tag, observed, want) in expected {
        let e = toy_with_error(observed);
        let keys = [e.find("keyinput0").unwrap()];
        let got = attack_and_classify(&original, &e, &keys, &RunSettings::default()).unwrap();
        // Independent re-check of the classification.
        let reverified = match &got.key {
            Some(k) => {
                let same =
                    exhaustive_difference(&apply_key(&e, &keys, k).unwrap(), &original).is_none();
                if same {
                    Outcome::Success
                } else {
                    Outcome::FailWrongKey
                }
            }
            None => got.outcome,
        };
        parts.push(format!(
            "({tag}) and->{}: {} key={:?}",
            observed.keyword().to_lowercase(),
            got.outcome.as_str(),
            got.key
        ));
        if got.outcome != want || reverified != got.outcome {
            failures.push(match tag {
                'b' => "(b)",
                'c' => "(c)",
                _ => "(d)",
            });
        }
    }
    let elapsed = start.elapsed();
    parts.push(format!("{:.3}s", elapsed.as_secs_f64()));
    if elapsed >= Duration::from_secs(1) {
        failures.push("runtime");
    }
    let detail = parts.join("; ");
    if failures.is_empty() {
        Ok(detail)
    } else {
        Err(format!("{} failed: {detail}", failures.join(",")))
    }
}

// ---------------------------------------------------------------- 2

fn criterion_2() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0002);
    let mut dips = 0usize;
    for trial in 0..200 {
        let m = rng.gen_range(2..=12);
        let gates = rng.gen_range(20..=200);
        let fraction = rng.gen_range(0.05..=0.25);
        let seed: u64 = rng.gen();
        let c = random_circuit(&mut rng, RandomCircuit::new(m, gates));
        let (locked, rec) = lock(&c, fraction, seed).map_err(|e| format!("trial {trial}: {e}"))?;
        let oracle = CircuitOracle::new(&c);
        let r = run_attack(&locked, &rec.key_input_ids, &oracle, &Budget::unlimited())
            .map_err(|e| format!("trial {trial}: {e}"))?;
        let AttackOutcome::KeyFound(k) = &r.outcome else {
            return Err(format!(
                "trial {trial} (M={m}, {gates} gates, {fraction:.3}): {:?}",
                r.outcome
            ));
        };
        let unlocked = apply_key(&locked, &rec.key_input_ids, k).unwrap();
        ensure(input_names(&unlocked).len() == m, || {
            format!("trial {trial}: key inputs left behind")
        })?;
        if let Some(row) = exhaustive_difference(&unlocked, &c) {
            return Err(format!(
                "trial {trial}: recovered key differs from original at row {row}"
            ));
        }
        dips += r.iterations();
    }
    Ok(format!(
        "200/200 trials recovered a correct key ({dips} DIPs total)"
    ))
}

// ---------------------------------------------------------------- 3

fn campaign_config(name: &str, percent: f64) -> ExperimentConfig {
    ExperimentConfig {
        benchmark: bench(name),
        percent,
        ..ExperimentConfig::default()
    }
}

fn rate(r: &CampaignResult, group: &str) -> Result<(f64, usize), String> {
    let s = r
        .summaries
        .iter()
        .find(|s| s.group == group)
        .ok_or_else(|| format!("{}: no summary for {group}", r.benchmark))?;
    // Recompute the rate from the raw records.
    let mine: Vec<_> = r.records.iter().filter(|x| x.group == group).collect();
    let count = |o: Outcome| mine.iter().filter(|x| x.outcome == o).count();
    let (ok, wrong, unsat) = (
        count(Outcome::Success),
        count(Outcome::FailWrongKey),
        count(Outcome::FailUnsat),
    );
    let denom = ok + wrong + unsat;
    if denom == 0 {
        return Err(format!("{}: {group} has no decided runs", r.benchmark));
    }
    let pct = 100.0 * ok as f64 / denom as f64;
    ensure(
        s.attack_success_pct.is_some_and(|p| (p - pct).abs() < 1e-9),
        || {
            format!(
                "{}: summary rate {:?} != recount {pct}",
                r.benchmark, s.attack_success_pct
            )
        },
    )?;
    Ok((pct, denom))
}

fn criterion_3() -> Check {
    let pairs = ["xor->xnor", "nand->nor", "and->or"];
    let mut out = Vec::new();
    let mut bad = Vec::new();
    for name in ["c432", "c880"] {
        let cfg = ExperimentConfig {
            pairs: pairs.iter().map(|s| s.to_string()).collect(),
            ..campaign_config(name, 0.05)
        };
        let r = harness::run_single_error_campaign(&cfg).map_err(|e| e.to_string())?;
        for pair in pairs {
            let (pct, n) = rate(&r, pair)?;
            out.push(format!("{name} {pair} {pct:.1}% of {n}"));
            let ok = match pair {
                // The c880 bound only; c432's xor->xnor rate is reported.
                "xor->xnor" => name != "c880" || pct >= 90.0,
                _ => pct <= 5.0,
            };
            if !ok {
                bad.push(format!("{name} {pair}"));
            }
        }
    }
    let detail = out.join(", ");
    if bad.is_empty() {
        Ok(detail)
    } else {
        Err(format!("out of bound: {}; {detail}", bad.join(", ")))
    }
}

// ---------------------------------------------------------------- 4

fn criterion_4() -> Check {
    let cfg = ExperimentConfig {
        ns: vec![2, 4, 8],
        k: 100,
        error_seed: 4,
        ..campaign_config("c432", 0.25)
    };
    let r = harness::run_multi_error_campaign(&cfg).map_err(|e| e.to_string())?;
    let mut rates = Vec::new();
    for n in [2, 4, 8] {
        let group = format!("N={n}");
        ensure(
            r.records.iter().filter(|x| x.group == group).count() == 100,
            || format!("{group}: expected 100 runs"),
        )?;
        rates.push(rate(&r, &group)?.0);
    }
    let detail = format!(
        "c432 25%: S2={:.1}% S4={:.1}% S8={:.1}%",
        rates[0], rates[1], rates[2]
    );
    ensure(rates.windows(2).all(|w| w[1] <= w[0]), || {
        format!("not non-increasing: {detail}")
    })?;
    if rates[0] >= 10.0 {
        ensure(rates[2] <= rates[0] / 2.0, || {
            format!("S8 > S2/2: {detail}")
        })?;
    }
    Ok(detail)
}

// ---------------------------------------------------------------- 5

fn criterion_5() -> Check {
    let mut checked = 0;
    for kind in GateType::LOGIC {
        for arity in 1..=3usize {
            if !kind.accepts_fanin(arity) {
                continue;
            }
            let ins: Vec<Lit> = (0..arity as u32).map(|i| Var(i).pos()).collect();
            let out = Var(arity as u32).pos();
            let clauses =
                encode_gate(kind, &ins, out).map_err(|e| format!("{kind} /{arity}: {e}"))?;
            for bits in 0..1u32 << (arity + 1) {
                let model: Vec<bool> = (0..=arity).map(|i| bits >> i & 1 == 1).collect();
                let sat = clauses.iter().all(|cl| cl.iter().any(|l| l.eval(&model)));
                let graph = model[arity] == reference_gate(kind, &model[..arity]);
                ensure(sat == graph, || {
                    format!("{kind}/{arity} assignment {bits:b}: clauses {sat}, function {graph}")
                })?;
            }
            checked += 1;
        }
    }
    Ok(format!(
        "{checked} (type, arity) encodings match their function graphs"
    ))
}

// ---------------------------------------------------------------- 6

fn rebuild_with_reversed_fanin(c: &Circuit) -> Circuit {
    let mut b = CircuitBuilder::new();
    let mut map = vec![GateId(0); c.len()];
    for &i in c.inputs() {
        map[i.index()] = b.add_input(c.name(i)).unwrap();
    }
    for &g in c.topo_order() {
        if c.kind(g) == GateType::Input {
            continue;
        }
        let fanin = c.fanin(g).iter().rev().map(|f| map[f.index()]).collect();
        map[g.index()] = b.add_gate(c.name(g), c.kind(g), fanin).unwrap();
    }
    for &o in c.outputs() {
        b.add_output(map[o.index()]);
    }
    b.build().unwrap()
}

fn mutate(c: &Circuit, rng: &mut ChaCha8Rng, count: usize) -> Circuit {
    let mut m = c.clone();
    let logic: Vec<GateId> = c.ids().filter(|&g| c.kind(g) != GateType::Input).collect();
    for _ in 0..count {
        let g = logic[rng.gen_range(0..logic.len())];
        let kind = m.kind(g);
        let new = if c.fanin(g).len() == 1 {
            if kind == GateType::Not {
                GateType::Buf
            } else {
                GateType::Not
            }
        } else {
            let others: Vec<GateType> = GateType::TWO_INPUT
                .into_iter()
                .filter(|&t| t != kind)
                .collect();
            others[rng.gen_range(0..others.len())]
        };
        m.set_kind(g, new).unwrap();
    }
    m
}

fn criterion_6() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0006);
    let (mut eq, mut ne) = (0, 0);
    for pair in 0..500 {
        let m = rng.gen_range(1..=12);
        let gates = rng.gen_range(3..=80);
        let a = random_circuit(&mut rng, RandomCircuit::new(m, gates));
        let b = match pair % 4 {
            0 => a.clone(),
            1 => rebuild_with_reversed_fanin(&a),
            2 => mutate(&a, &mut rng, 1),
            _ => {
                let n = rng.gen_range(2..=4);
                mutate(&a, &mut rng, n)
            }
        };
        let verdict = equivalent(&a, &b).map_err(|e| format!("pair {pair}: {e}"))?;
        let truth = exhaustive_difference(&a, &b);
        ensure(verdict.is_equivalent() == truth.is_none(), || {
            format!(
                "pair {pair}: miter says {}, exhaustive says {:?}",
                verdict.is_equivalent(),
                truth
            )
        })?;
        if let Some(cex) = verdict.counterexample() {
            let names = input_names(&a);
            ensure(cex.len() == names.len(), || {
                format!("pair {pair}: counterexample width")
            })?;
            let p: HashMap<&str, bool> = names.iter().copied().zip(cex.iter().copied()).collect();
            ensure(Interp::new(&a).run(&p) != Interp::new(&b).run(&p), || {
                format!("pair {pair}: counterexample does not replay")
            })?;
            ne += 1;
        } else {
            eq += 1;
        }
    }
    Ok(format!(
        "500/500 verdicts agree ({eq} equivalent, {ne} different, all counterexamples replay)"
    ))
}

// ---------------------------------------------------------------- 7

fn binomial(n: u32, k: u32) -> BigUint {
    let mut r = BigUint::one();
    for i in 0..k {
        r = r * BigUint::from(n - i) / BigUint::from(i + 1);
    }
    r
}

fn criterion_7() -> Check {
    for l in 1..=64u32 {
        for m in 1..=8u32 {
            let mut sum = BigUint::zero();
            for k in 1..=l {
                sum += binomial(l, k) * BigUint::from(m).pow(k);
            }
            let closed = BigUint::from(1 + m).pow(l) - BigUint::one();
            let got = search_space_size(l, m);
            ensure(got == sum && got == closed, || {
                format!("L={l} m={m}: got {got}, summation {sum}, closed form {closed}")
            })?;
        }
    }
    Ok(format!(
        "512 (L, m) points exact; L=64 m=5: {}",
        search_space_size(64, 5)
    ))
}

// ---------------------------------------------------------------- 8

fn criterion_8() -> Check {
    let runs: Vec<(&str, ExperimentConfig)> = vec![
        ("single c432", campaign_config("c432", 0.05)),
        (
            "multi c432",
            ExperimentConfig {
                ns: vec![2, 4],
                k: 25,
                error_seed: 8,
                ..campaign_config("c432", 0.25)
            },
        ),
        (
            "sweep c17",
            ExperimentConfig {
                pairs: vec!["nand->nor".into()],
                seeds: vec![0, 1, 2],
                percents: vec![0.1, 0.2, 0.3],
                ..campaign_config("c17", 0.05)
            },
        ),
    ];
    let mut sizes = Vec::new();
    for (label, cfg) in runs {
        let go = |threads: usize| {
            let cfg = ExperimentConfig {
                threads: Some(threads),
                ..cfg.clone()
            };
            let r = match label {
                l if l.starts_with("single") => harness::run_single_error_campaign(&cfg),
                l if l.starts_with("multi") => harness::run_multi_error_campaign(&cfg),
                _ => harness::run_locking_sweep(&cfg),
            };
            r.map(|r| to_csv(&r.records)).map_err(|e| e.to_string())
        };
        let first = go(1)?;
        let second = go(4)?;
        ensure(first == second, || {
            format!("{label}: CSV differs between runs")
        })?;
        ensure(first.lines().count() > 1, || format!("{label}: no records"))?;
        sizes.push(format!("{label} {} rows", first.lines().count() - 1));
    }

    // Same check through the CLI, byte for byte on disk.
    let dir = std::env::temp_dir().join(format!("relock-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).map_err(|e| e.to_string())?;
    let mut files = Vec::new();
    for i in 0..2 {
        let out = dir.join(format!("run{i}.csv"));
        let status = Command::new(env!("CARGO_BIN_EXE_relock"))
            .args(["campaign", "single", "--percent", "0.05", "--benchmark"])
            .arg(bench("c432"))
            .arg("-o")
            .arg(&out)
            .output()
            .map_err(|e| e.to_string())?;
        ensure(status.status.success(), || {
            String::from_utf8_lossy(&status.stderr).into_owned()
        })?;
        files.push(std::fs::read(&out).map_err(|e| e.to_string())?);
    }
    let _ = std::fs::remove_dir_all(&dir);
    ensure(files[0] == files[1], || {
        "CLI CSV differs between runs".into()
    })?;
    sizes.push(format!("CLI {} bytes", files[0].len()));
    Ok(format!("byte-identical: {}", sizes.join(", ")))
}

// ----------------------------------------------------------------

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("toy golden suite", criterion_1),
        ("error-free completeness", criterion_2),
        ("single-error trends", criterion_3),
        ("multi-error degradation", criterion_4),
        ("gate encodings", criterion_5),
        ("miter agreement", criterion_6),
        ("search-space formula", criterion_7),
        ("determinism", criterion_8),
    ];
    let filter: Vec<String> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .collect();
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let id = format!("{}", i + 1);
        if !filter.is_empty() && !filter.iter().any(|x| *x == id || name.contains(x.as_str())) {
            continue;
        }
        let start = Instant::now();
        let res = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let secs = start.elapsed().as_secs_f64();
        match res {
            Ok(d) => println!("criterion {id} {name}: PASS [{secs:.1}s] {d}"),
            Err(d) => {
                failed += 1;
                println!("criterion {id} {name}: FAIL [{secs:.1}s] {d}");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criterion/criteria failed");
        ExitCode::FAILURE
    }
}
