//! Experiment flow: lock, inject errors, attack, verify, aggregate.
//!
//! The oracle is always the error-free original. A run counts as SUCCESS
//! only if the attack returns a key and that key, applied to the erroneous
//! locked netlist, is formally equivalent to the original.

mod config;
mod report;

use std::path::Path;
use std::time::Duration;

use rayon::prelude::*;
use serde::Serialize;

use relock_core::attack::{run_attack_with, AttackError, AttackOutcome, CircuitOracle};
use relock_core::circuit::{Circuit, GateId};
use relock_core::errors::{
    apply_errors, enumerate_single_errors, sample_multi_errors, ErrorModelError, ErrorScenario,
    ErrorSelection,
};
use relock_core::locking::{apply_key, lock, KeyError, LockError, LockRecord};
use relock_core::sat::{Budget, Solver};
use relock_core::verify::{equivalent, VerifyError};

use crate::bench::{read_bench, BenchError};
use crate::clock::StdClock;
use crate::dimacs::{solver_command_from_env, ExternalSolver};

pub use config::{pair_label, parse_pair, ExperimentConfig, SolverKind};
pub use report::{to_csv, write_csv, write_summary, CsvRow, CSV_HEADER};

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Bench(#[from] BenchError),
    #[error(transparent)]
    Lock(#[from] LockError),
    #[error(transparent)]
    ErrorModel(#[from] ErrorModelError),
    #[error(transparent)]
    Attack(#[from] AttackError),
    #[error(transparent)]
    Key(#[from] KeyError),
    #[error(transparent)]
    Verify(#[from] VerifyError),
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Outcome {
    Success,
    FailWrongKey,
    FailUnsat,
    Timeout,
}

impl Outcome {
    pub fn as_str(self) -> &'static str {
        match self {
            Outcome::Success => "SUCCESS",
            Outcome::FailWrongKey => "FAIL_WRONG_KEY",
            Outcome::FailUnsat => "FAIL_UNSAT",
            Outcome::Timeout => "TIMEOUT",
        }
    }
}

/// Solver and budget for individual runs.
#[derive(Clone, Debug, Default)]
pub struct RunSettings {
    pub timeout: Option<Duration>,
    pub conflict_limit: Option<u64>,
    /// External solver command; `None` uses the embedded solver.
    pub external: Option<Vec<String>>,
}

impl RunSettings {
    pub fn from_config(cfg: &ExperimentConfig) -> Result<Self, HarnessError> {
        let external = match cfg.solver {
            SolverKind::Embedded => None,
            SolverKind::External => Some(
                cfg.solver_command
                    .as_deref()
                    .map(|c| c.split_whitespace().map(String::from).collect::<Vec<_>>())
                    .filter(|c| !c.is_empty())
                    .or_else(solver_command_from_env)
                    .ok_or_else(|| {
                        HarnessError::Config(
                            "external solver selected but no command given (set solver_command or RELOCK_SOLVER)"
                                .into(),
                        )
                    })?,
            ),
        };
        Ok(RunSettings {
            timeout: cfg.timeout(),
            conflict_limit: cfg.conflict_limit,
            external,
        })
    }
}

/// Result of attacking one erroneous netlist.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RunOutcome {
    pub outcome: Outcome,
    pub iterations: usize,
    pub key: Option<Vec<bool>>,
    pub wall: Duration,
}

/// Attacks `erroneous` with the original as oracle and classifies the
/// result by formal equivalence.
pub fn attack_and_classify(
    original: &Circuit,
    erroneous: &Circuit,
    key_inputs: &[GateId],
    settings: &RunSettings,
) -> Result<RunOutcome, HarnessError> {
    let clock = StdClock::start();
    let mut budget = Budget::until(&clock, settings.timeout);
    if let Some(n) = settings.conflict_limit {
        budget = budget.with_conflict_limit(n);
    }
    let oracle = CircuitOracle::new(original);
    let result = match &settings.external {
        None => run_attack_with(&mut Solver::new(), erroneous, key_inputs, &oracle, &budget)?,
        Some(cmd) => {
            let mut ext = ExternalSolver::new(cmd.clone())?.with_origin(clock.origin());
            run_attack_with(&mut ext, erroneous, key_inputs, &oracle, &budget)?
        }
    };
    let (outcome, key) = match result.outcome {
        AttackOutcome::KeyFound(k) => {
            let unlocked = apply_key(erroneous, key_inputs, &k)?;
            let ok = equivalent(&unlocked, original)?.is_equivalent();
            (
                if ok {
                    Outcome::Success
                } else {
                    Outcome::FailWrongKey
                },
                Some(k),
            )
        }
        AttackOutcome::Unsat => (Outcome::FailUnsat, None),
        AttackOutcome::Timeout => (Outcome::Timeout, None),
    };
    Ok(RunOutcome {
        outcome,
        iterations: result.dips.len(),
        key,
        wall: clock.origin().elapsed(),
    })
}

/// One attacked scenario.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunRecord {
    pub index: usize,
    /// Summary group this run belongs to (error pair, `N=..` or `p=..`).
    pub group: String,
    pub benchmark: String,
    pub percent: f64,
    pub error_spec: String,
    pub n: usize,
    pub k: usize,
    /// Lock seed.
    pub seed: u64,
    pub outcome: Outcome,
    pub iterations: usize,
    pub wall_ms: Option<u64>,
    #[serde(skip)]
    pub key: Option<Vec<bool>>,
}

/// Outcome counts and attack success for one group.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Summary {
    pub group: String,
    pub runs: usize,
    pub success: usize,
    pub fail_wrong_key: usize,
    pub fail_unsat: usize,
    pub timeout: usize,
    /// `100 · SUCCESS / (SUCCESS + FAIL_WRONG_KEY + FAIL_UNSAT)`; absent
    /// when that denominator is zero. Timeouts are not counted.
    pub attack_success_pct: Option<f64>,
}

impl Summary {
    pub fn new(group: impl Into<String>) -> Self {
        Summary {
            group: group.into(),
            ..Default::default()
        }
    }

    pub fn add(&mut self, o: Outcome) {
        self.runs += 1;
        match o {
            Outcome::Success => self.success += 1,
            Outcome::FailWrongKey => self.fail_wrong_key += 1,
            Outcome::FailUnsat => self.fail_unsat += 1,
            Outcome::Timeout => self.timeout += 1,
        }
        let decided = self.success + self.fail_wrong_key + self.fail_unsat;
        self.attack_success_pct =
            (decided > 0).then(|| 100.0 * self.success as f64 / decided as f64);
    }

    /// Groups records by `group`, in first-appearance order; `groups`
    /// pre-seeds (possibly empty) groups in the given order.
    pub fn collect(groups: &[String], records: &[RunRecord]) -> Vec<Summary> {
        let mut out: Vec<Summary> = groups.iter().map(Summary::new).collect();
        for r in records {
            let i = match out.iter().position(|s| s.group == r.group) {
                Some(i) => i,
                None => {
                    out.push(Summary::new(&r.group));
                    out.len() - 1
                }
            };
            out[i].add(r.outcome);
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CampaignKind {
    Single,
    Multi,
    Sweep,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CampaignResult {
    pub campaign: CampaignKind,
    pub benchmark: String,
    pub summaries: Vec<Summary>,
    /// Sweep only: Kendall rank correlation between locking fraction and
    /// attack success (reported, not asserted).
    pub trend_kendall_tau: Option<f64>,
    #[serde(skip)]
    pub records: Vec<RunRecord>,
}

/// A locked instance of the benchmark, ready for error injection.
#[derive(Clone, Debug)]
pub struct LockedInstance {
    pub percent: f64,
    pub seed: u64,
    pub locked: Circuit,
    pub record: LockRecord,
}

impl LockedInstance {
    pub fn new(original: &Circuit, percent: f64, seed: u64) -> Result<Self, HarnessError> {
        let (locked, record) = lock(original, percent, seed)?;
        Ok(LockedInstance {
            percent,
            seed,
            locked,
            record,
        })
    }
}

/// Work item: one scenario on one locked instance.
struct Job<'a> {
    group: String,
    inst: &'a LockedInstance,
    scenario: ErrorScenario,
    k: usize,
}

/// `NET:from->to` entries joined by `;`.
pub fn error_spec(c: &Circuit, s: &ErrorScenario) -> String {
    s.substitutions
        .iter()
        .map(|x| format!("{}:{}", c.name(x.gate), pair_label(x.original, x.observed)))
        .collect::<Vec<_>>()
        .join(";")
}

fn run_jobs(
    benchmark: &str,
    original: &Circuit,
    jobs: Vec<Job<'_>>,
    settings: &RunSettings,
    record_wall_time: bool,
) -> Result<Vec<RunRecord>, HarnessError> {
    jobs.into_par_iter()
        .enumerate()
        .map(|(index, job)| {
            let erroneous = apply_errors(&job.inst.locked, &job.scenario)?;
            let r = attack_and_classify(
                original,
                &erroneous,
                &job.inst.record.key_input_ids,
                settings,
            )?;
            Ok(RunRecord {
                index,
                group: job.group,
                benchmark: benchmark.to_string(),
                percent: job.inst.percent,
                error_spec: error_spec(&job.inst.locked, &job.scenario),
                n: job.scenario.len(),
                k: job.k,
                seed: job.inst.seed,
                outcome: r.outcome,
                iterations: r.iterations,
                wall_ms: record_wall_time.then_some(r.wall.as_millis() as u64),
                key: r.key,
            })
        })
        .collect()
}

fn single_jobs<'a>(
    inst: &'a LockedInstance,
    selections: &[ErrorSelection],
    group: impl Fn(&str) -> String,
) -> Vec<Job<'a>> {
    let mut jobs = Vec::new();
    for &sel in selections {
        let label = match sel {
            ErrorSelection::Pair(a, b) => pair_label(a, b),
            ErrorSelection::All => "all".into(),
        };
        let scenarios: Vec<ErrorScenario> = enumerate_single_errors(&inst.locked, sel).collect();
        let k = scenarios.len();
        jobs.extend(scenarios.into_iter().map(|scenario| Job {
            group: group(&label),
            inst,
            scenario,
            k,
        }));
    }
    jobs
}

/// Exhaustive single errors for the given pairs on pre-built locks.
pub fn single_error_records(
    benchmark: &str,
    original: &Circuit,
    instances: &[LockedInstance],
    selections: &[ErrorSelection],
    settings: &RunSettings,
    record_wall_time: bool,
) -> Result<Vec<RunRecord>, HarnessError> {
    let jobs = instances
        .iter()
        .flat_map(|inst| single_jobs(inst, selections, |l| l.to_string()))
        .collect();
    run_jobs(benchmark, original, jobs, settings, record_wall_time)
}

/// Mixes campaign seeds into one sampling seed.
fn derive_seed(parts: &[u64]) -> u64 {
    let mut h = 0x9E37_79B9_7F4A_7C15u64;
    for &p in parts {
        h ^= p
            .wrapping_add(0x9E37_79B9_7F4A_7C15)
            .wrapping_add(h << 6)
            .wrapping_add(h >> 2);
        h = (h ^ (h >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        h = (h ^ (h >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        h ^= h >> 31;
    }
    h
}

/// `k` sampled scenarios per N on pre-built locks.
#[allow(clippy::too_many_arguments)]
pub fn multi_error_records(
    benchmark: &str,
    original: &Circuit,
    instances: &[LockedInstance],
    ns: &[usize],
    k: usize,
    error_seed: u64,
    settings: &RunSettings,
    record_wall_time: bool,
) -> Result<Vec<RunRecord>, HarnessError> {
    let mut jobs = Vec::new();
    for &n in ns {
        for inst in instances {
            let seed = derive_seed(&[error_seed, inst.seed, n as u64]);
            for scenario in sample_multi_errors(&inst.locked, n, k, seed)? {
                jobs.push(Job {
                    group: format!("N={n}"),
                    inst,
                    scenario,
                    k,
                });
            }
        }
    }
    run_jobs(benchmark, original, jobs, settings, record_wall_time)
}

pub fn benchmark_name(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

fn with_pool<T: Send>(
    threads: Option<usize>,
    f: impl FnOnce() -> Result<T, HarnessError> + Send,
) -> Result<T, HarnessError> {
    match threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| HarnessError::Config(e.to_string()))?
            .install(f),
        None => f(),
    }
}

fn prepare(cfg: &ExperimentConfig) -> Result<(String, Circuit, RunSettings), HarnessError> {
    cfg.validate()?;
    let original = read_bench(&cfg.benchmark)?;
    Ok((
        benchmark_name(&cfg.benchmark),
        original,
        RunSettings::from_config(cfg)?,
    ))
}

pub fn run_single_error_campaign(cfg: &ExperimentConfig) -> Result<CampaignResult, HarnessError> {
    let (name, original, settings) = prepare(cfg)?;
    let selections = cfg.selections()?;
    let instances = cfg
        .seeds
        .iter()
        .map(|&s| LockedInstance::new(&original, cfg.percent, s))
        .collect::<Result<Vec<_>, _>>()?;
    let records = with_pool(cfg.threads, || {
        single_error_records(
            &name,
            &original,
            &instances,
            &selections,
            &settings,
            cfg.record_wall_time,
        )
    })?;
    let groups: Vec<String> = selections
        .iter()
        .filter_map(|s| match *s {
            ErrorSelection::Pair(a, b) => Some(pair_label(a, b)),
            ErrorSelection::All => None,
        })
        .collect();
    Ok(CampaignResult {
        campaign: CampaignKind::Single,
        benchmark: name,
        summaries: Summary::collect(&groups, &records),
        trend_kendall_tau: None,
        records,
    })
}

pub fn run_multi_error_campaign(cfg: &ExperimentConfig) -> Result<CampaignResult, HarnessError> {
    cfg.check_multi()?;
    let (name, original, settings) = prepare(cfg)?;
    let instances = cfg
        .seeds
        .iter()
        .map(|&s| LockedInstance::new(&original, cfg.percent, s))
        .collect::<Result<Vec<_>, _>>()?;
    let records = with_pool(cfg.threads, || {
        multi_error_records(
            &name,
            &original,
            &instances,
            &cfg.ns,
            cfg.k,
            cfg.error_seed,
            &settings,
            cfg.record_wall_time,
        )
    })?;
    let groups: Vec<String> = cfg.ns.iter().map(|n| format!("N={n}")).collect();
    Ok(CampaignResult {
        campaign: CampaignKind::Multi,
        benchmark: name,
        summaries: Summary::collect(&groups, &records),
        trend_kendall_tau: None,
        records,
    })
}

/// Fixed error pairs, varying locking fraction. Each fraction's summary
/// aggregates every selected pair.
pub fn run_locking_sweep(cfg: &ExperimentConfig) -> Result<CampaignResult, HarnessError> {
    cfg.check_percents()?;
    let (name, original, settings) = prepare(cfg)?;
    let selections = cfg.selections()?;
    let mut instances = Vec::new();
    for &p in &cfg.percents {
        for &s in &cfg.seeds {
            instances.push(LockedInstance::new(&original, p, s)?);
        }
    }
    let records = with_pool(cfg.threads, || {
        let jobs = instances
            .iter()
            .flat_map(|inst| single_jobs(inst, &selections, |_| format!("p={}", inst.percent)))
            .collect();
        run_jobs(&name, &original, jobs, &settings, cfg.record_wall_time)
    })?;
    let groups: Vec<String> = cfg.percents.iter().map(|p| format!("p={p}")).collect();
    let summaries = Summary::collect(&groups, &records);
    let points: Vec<(f64, f64)> = cfg
        .percents
        .iter()
        .zip(&summaries)
        .filter_map(|(&p, s)| Some((p, s.attack_success_pct?)))
        .collect();
    Ok(CampaignResult {
        campaign: CampaignKind::Sweep,
        benchmark: name,
        summaries,
        trend_kendall_tau: kendall_tau(&points),
        records,
    })
}

/// Kendall's tau-a; `None` with fewer than two points.
pub fn kendall_tau(points: &[(f64, f64)]) -> Option<f64> {
    let n = points.len();
    if n < 2 {
        return None;
    }
    let mut score = 0i64;
    for i in 0..n {
        for j in i + 1..n {
            let dx = points[j].0 - points[i].0;
            let dy = points[j].1 - points[i].1;
            score += (dx * dy).partial_cmp(&0.0).map_or(0, |o| o as i64);
        }
    }
    Some(score as f64 / (n * (n - 1) / 2) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(group: &str, o: Outcome) -> RunRecord {
        RunRecord {
            index: 0,
            group: group.into(),
            benchmark: "b".into(),
            percent: 0.1,
            error_spec: String::new(),
            n: 1,
            k: 1,
            seed: 0,
            outcome: o,
            iterations: 0,
            wall_ms: None,
            key: None,
        }
    }

    #[test]
    fn success_rate_excludes_timeouts() {
        use Outcome::*;
        let outcomes = [
            Success,
            Success,
            Success,
            FailWrongKey,
            FailUnsat,
            FailUnsat,
            Timeout,
            Timeout,
            Success,
            Timeout,
        ];
        let records: Vec<RunRecord> = outcomes.iter().map(|&o| rec("g", o)).collect();
        let s = &Summary::collect(&[], &records)[0];
        assert_eq!(
            (s.success, s.fail_wrong_key, s.fail_unsat, s.timeout),
            (4, 1, 2, 3)
        );
        assert_eq!(s.runs, 10);
        assert_eq!(s.attack_success_pct, Some(100.0 * 4.0 / 7.0));
        let one = Summary::collect(&[], &[rec("g", Success)]);
        assert_eq!(one[0].attack_success_pct, Some(100.0));
        let empty = Summary::collect(&["x".into()], &[]);
        assert_eq!(empty[0].attack_success_pct, None);
        assert_eq!(
            Summary::collect(&[], &[rec("g", Timeout)])[0].attack_success_pct,
            None
        );
    }

    #[test]
    fn kendall() {
        assert_eq!(kendall_tau(&[(0.1, 1.0)]), None);
        assert_eq!(
            kendall_tau(&[(0.1, 1.0), (0.2, 2.0), (0.3, 3.0)]),
            Some(1.0)
        );
        assert_eq!(
            kendall_tau(&[(0.1, 3.0), (0.2, 2.0), (0.3, 1.0)]),
            Some(-1.0)
        );
    }

    #[test]
    fn derived_seeds_differ() {
        assert_ne!(derive_seed(&[1, 2, 3]), derive_seed(&[1, 2, 4]));
        assert_eq!(derive_seed(&[5, 6]), derive_seed(&[5, 6]));
    }
}
