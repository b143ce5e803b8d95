use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use relock::bench::{read_bench, write_bench};
use relock::clock::StdClock;
use relock::dimacs::{format_solver_output, parse_dimacs, solver_command_from_env, ExternalSolver};
use relock::harness::{
    self, parse_pair, write_csv, write_summary, CampaignResult, ExperimentConfig, SolverKind,
};
use relock::records::{key_inputs_by_name, LockJson, ScenarioJson};
use relock::trace::{bits_to_string, parse_bits, trace_lines};
use relock_core::attack::{run_attack_with, AttackOutcome, CircuitOracle};
use relock_core::circuit::{Circuit, GateId};
use relock_core::errors::{
    apply_errors, sample_multi_errors, search_space_size, ErrorScenario, Substitution,
};
use relock_core::locking::{apply_key, lock};
use relock_core::sat::{sync_backend, Budget, SatBackend, Solver};
use relock_core::verify::{equivalent, Equivalence};

#[derive(Parser)]
#[command(
    name = "relock",
    version,
    about = "Logic locking, RE-error injection and SAT attack experiments"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Insert random XOR/XNOR key gates.
    Lock {
        bench: PathBuf,
        /// Locking fraction in (0, 1].
        #[arg(long, short)]
        percent: f64,
        #[arg(long, short, default_value_t = 0)]
        seed: u64,
        #[arg(long, short)]
        output: PathBuf,
        /// Lock record sidecar (JSON); defaults to `<output>.lock.json`.
        #[arg(long)]
        record: Option<PathBuf>,
    },
    /// Apply gate-type errors to a netlist.
    Inject {
        bench: PathBuf,
        /// Explicit substitution `NET=TYPE` (repeatable).
        #[arg(long = "sub", value_name = "NET=TYPE")]
        subs: Vec<String>,
        /// Scenario JSON to apply.
        #[arg(long, conflicts_with_all = ["subs", "random"])]
        scenario: Option<PathBuf>,
        /// Sample this many random errors instead.
        #[arg(long, conflicts_with = "subs")]
        random: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, short)]
        output: PathBuf,
        /// Where to write the applied scenario; defaults to `<output>.errors.json`.
        #[arg(long)]
        record: Option<PathBuf>,
    },
    /// Run the oracle-guided SAT attack.
    Attack {
        /// Locked (possibly erroneous) netlist.
        locked: PathBuf,
        /// Original netlist used as the oracle.
        #[arg(long)]
        oracle: PathBuf,
        /// Lock record naming the key inputs; otherwise `keyinput<n>` inputs are used.
        #[arg(long)]
        record: Option<PathBuf>,
        #[arg(long)]
        timeout: Option<f64>,
        #[command(flatten)]
        solver: SolverArgs,
        /// Print one line per iteration.
        #[arg(long)]
        trace: bool,
        /// Also check the recovered key against the oracle netlist.
        #[arg(long)]
        verify: bool,
    },
    /// Formal equivalence check (ports matched by name).
    Verify {
        a: PathBuf,
        b: PathBuf,
        /// Apply this key (bit string) to `a` first.
        #[arg(long)]
        key: Option<String>,
        #[arg(long, requires = "key")]
        record: Option<PathBuf>,
    },
    /// Error campaigns.
    Campaign {
        #[command(subcommand)]
        kind: CampaignCmd,
    },
    /// Solve a DIMACS file with the embedded solver (competition output).
    Sat { cnf: PathBuf },
    /// Number of non-empty error patterns over L gates with m choices each.
    SearchSpace {
        l: u32,
        #[arg(default_value_t = 5)]
        m: u32,
    },
}

#[derive(Args, Clone)]
struct SolverArgs {
    /// Use an external solver command (else `RELOCK_SOLVER`).
    #[arg(long)]
    external: bool,
    #[arg(long, value_name = "CMD")]
    solver_command: Option<String>,
}

#[derive(Subcommand)]
enum CampaignCmd {
    /// Exhaustive single errors per type pair.
    Single(CampaignArgs),
    /// K random N-error scenarios per N.
    Multi(CampaignArgs),
    /// Single errors across locking fractions.
    Sweep(CampaignArgs),
}

#[derive(Args)]
struct CampaignArgs {
    /// TOML config; flags below override it.
    #[arg(long, short)]
    config: Option<PathBuf>,
    #[arg(long)]
    benchmark: Option<PathBuf>,
    #[arg(long)]
    percent: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    /// Error pairs such as `xor->xnor`, or `all`.
    #[arg(long, value_delimiter = ',')]
    pairs: Option<Vec<String>>,
    #[arg(long, value_delimiter = ',')]
    ns: Option<Vec<usize>>,
    #[arg(long, short)]
    k: Option<usize>,
    #[arg(long)]
    error_seed: Option<u64>,
    #[arg(long, value_delimiter = ',')]
    percents: Option<Vec<f64>>,
    #[arg(long)]
    timeout: Option<f64>,
    #[arg(long)]
    conflict_limit: Option<u64>,
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long, short)]
    output: Option<PathBuf>,
    #[arg(long)]
    summary: Option<PathBuf>,
    #[arg(long)]
    record_wall_time: bool,
}

impl CampaignArgs {
    fn into_config(self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::load(p)?,
            None => ExperimentConfig::default(),
        };
        if let Some(v) = self.benchmark {
            cfg.benchmark = v;
        }
        if let Some(v) = self.percent {
            cfg.percent = v;
        }
        if let Some(v) = self.seeds {
            cfg.seeds = v;
        }
        if let Some(v) = self.pairs {
            cfg.pairs = v;
        }
        if let Some(v) = self.ns {
            cfg.ns = v;
        }
        if let Some(v) = self.k {
            cfg.k = v;
        }
        if let Some(v) = self.error_seed {
            cfg.error_seed = v;
        }
        if let Some(v) = self.percents {
            cfg.percents = v;
        }
        if self.timeout.is_some() {
            cfg.timeout_secs = self.timeout;
        }
        if self.conflict_limit.is_some() {
            cfg.conflict_limit = self.conflict_limit;
        }
        if self.solver.external {
            cfg.solver = SolverKind::External;
        }
        if self.solver.solver_command.is_some() {
            cfg.solver_command = self.solver.solver_command;
        }
        if self.threads.is_some() {
            cfg.threads = self.threads;
        }
        if self.output.is_some() {
            cfg.output = self.output;
        }
        if self.summary.is_some() {
            cfg.summary = self.summary;
        }
        cfg.record_wall_time |= self.record_wall_time;
        if cfg.benchmark.as_os_str().is_empty() {
            bail!("no benchmark given (use --benchmark or a config file)");
        }
        Ok(cfg)
    }
}

fn sidecar(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn load(path: &Path) -> Result<Circuit> {
    read_bench(path).with_context(|| format!("reading {}", path.display()))
}

fn key_inputs(locked: &Circuit, record: Option<&Path>) -> Result<Vec<GateId>> {
    match record {
        Some(p) => {
            let json: LockJson = serde_json::from_str(&fs::read_to_string(p)?)
                .with_context(|| format!("parsing {}", p.display()))?;
            Ok(json.to_record(locked)?.key_input_ids)
        }
        None => {
            let keys = key_inputs_by_name(locked);
            if keys.is_empty() {
                bail!("no key inputs found; pass --record");
            }
            Ok(keys)
        }
    }
}

fn cmd_lock(
    bench: &Path,
    percent: f64,
    seed: u64,
    output: &Path,
    record: Option<PathBuf>,
) -> Result<()> {
    let c = load(bench)?;
    let (locked, rec) = lock(&c, percent, seed)?;
    fs::write(output, write_bench(&locked))?;
    let record = record.unwrap_or_else(|| sidecar(output, ".lock.json"));
    fs::write(
        &record,
        serde_json::to_string_pretty(&LockJson::from_record(&locked, &rec))? + "\n",
    )?;
    println!(
        "locked {} with {} key gates, key {} -> {} ({})",
        bench.display(),
        rec.num_keys(),
        bits_to_string(&rec.correct_key),
        output.display(),
        record.display()
    );
    Ok(())
}

fn parse_sub(c: &Circuit, s: &str) -> Result<Substitution> {
    let (net, ty) = s.split_once('=').context("expected NET=TYPE")?;
    let gate = c
        .find(net.trim())
        .with_context(|| format!("unknown net `{net}`"))?;
    let observed = ty.trim().parse()?;
    Ok(Substitution {
        gate,
        original: c.kind(gate),
        observed,
    })
}

#[allow(clippy::too_many_arguments)]
fn cmd_inject(
    bench: &Path,
    subs: &[String],
    scenario: Option<&Path>,
    random: Option<usize>,
    seed: u64,
    output: &Path,
    record: Option<PathBuf>,
) -> Result<()> {
    let c = load(bench)?;
    let s = if let Some(p) = scenario {
        let json: ScenarioJson = serde_json::from_str(&fs::read_to_string(p)?)?;
        json.to_scenario(&c)?
    } else if let Some(n) = random {
        sample_multi_errors(&c, n, 1, seed)?.remove(0)
    } else {
        ErrorScenario::new(
            subs.iter()
                .map(|s| parse_sub(&c, s))
                .collect::<Result<_>>()?,
        )
    };
    let e = apply_errors(&c, &s)?;
    fs::write(output, write_bench(&e))?;
    let record = record.unwrap_or_else(|| sidecar(output, ".errors.json"));
    fs::write(
        &record,
        serde_json::to_string_pretty(&ScenarioJson::from_scenario(&c, &s))? + "\n",
    )?;
    println!("{}", harness::error_spec(&c, &s));
    Ok(())
}

fn external_command(args: &SolverArgs) -> Result<Option<Vec<String>>> {
    if !args.external {
        return Ok(None);
    }
    let cmd = args
        .solver_command
        .as_deref()
        .map(|c| c.split_whitespace().map(String::from).collect::<Vec<_>>())
        .or_else(solver_command_from_env)
        .context("--external needs --solver-command or RELOCK_SOLVER")?;
    Ok(Some(cmd))
}

#[allow(clippy::too_many_arguments)]
fn cmd_attack(
    locked_path: &Path,
    oracle_path: &Path,
    record: Option<&Path>,
    timeout: Option<f64>,
    solver: &SolverArgs,
    trace: bool,
    verify: bool,
) -> Result<()> {
    let locked = load(locked_path)?;
    let original = load(oracle_path)?;
    let keys = key_inputs(&locked, record)?;
    let clock = StdClock::start();
    let budget = Budget::until(&clock, timeout.map(std::time::Duration::from_secs_f64));
    let oracle = CircuitOracle::new(&original);
    let r = match external_command(solver)? {
        None => run_attack_with(&mut Solver::new(), &locked, &keys, &oracle, &budget)?,
        Some(cmd) => {
            let mut ext = ExternalSolver::new(cmd)?.with_origin(clock.origin());
            run_attack_with(&mut ext, &locked, &keys, &oracle, &budget)?
        }
    };
    if trace {
        for line in trace_lines(&r) {
            println!("{line}");
        }
    }
    match &r.outcome {
        AttackOutcome::KeyFound(k) => {
            println!("KEY {} after {} DIPs", bits_to_string(k), r.iterations());
            if verify {
                let unlocked = apply_key(&locked, &keys, k)?;
                match equivalent(&unlocked, &original)? {
                    Equivalence::Equivalent => println!("key is functionally correct"),
                    Equivalence::Different(x) => {
                        println!(
                            "key is functionally incorrect (counterexample {})",
                            bits_to_string(&x)
                        )
                    }
                }
            }
        }
        AttackOutcome::Unsat => println!("UNSAT after {} DIPs", r.iterations()),
        AttackOutcome::Timeout => println!("TIMEOUT after {} DIPs", r.iterations()),
    }
    Ok(())
}

fn cmd_verify(a: &Path, b: &Path, key: Option<&str>, record: Option<&Path>) -> Result<bool> {
    let mut ca = load(a)?;
    let cb = load(b)?;
    if let Some(k) = key {
        let bits = parse_bits(k).context("key must be a string of 0/1")?;
        let keys = key_inputs(&ca, record)?;
        ca = apply_key(&ca, &keys, &bits)?;
    }
    Ok(match equivalent(&ca, &cb)? {
        Equivalence::Equivalent => {
            println!("EQUIVALENT");
            true
        }
        Equivalence::Different(x) => {
            println!("DIFFERENT counterexample {}", bits_to_string(&x));
            false
        }
    })
}

fn print_campaign(r: &CampaignResult) {
    println!(
        "{} campaign on {}",
        serde_json::to_string(&r.campaign)
            .unwrap()
            .trim_matches('"'),
        r.benchmark
    );
    for s in &r.summaries {
        let rate = s
            .attack_success_pct
            .map_or("n/a".to_string(), |p| format!("{p:.1}%"));
        println!(
            "  {:<14} runs={:<5} success={:<5} wrong_key={:<5} unsat={:<5} timeout={:<5} attack_success={}",
            s.group, s.runs, s.success, s.fail_wrong_key, s.fail_unsat, s.timeout, rate
        );
    }
    if let Some(t) = r.trend_kendall_tau {
        println!("  trend (Kendall tau, fraction vs success): {t:.3}");
    }
}

fn cmd_campaign(kind: CampaignCmd) -> Result<()> {
    let (which, args) = match kind {
        CampaignCmd::Single(a) => (0, a),
        CampaignCmd::Multi(a) => (1, a),
        CampaignCmd::Sweep(a) => (2, a),
    };
    let cfg = args.into_config()?;
    for p in &cfg.pairs {
        if !p.eq_ignore_ascii_case("all") {
            parse_pair(p)?;
        }
    }
    let result = match which {
        0 => harness::run_single_error_campaign(&cfg)?,
        1 => harness::run_multi_error_campaign(&cfg)?,
        _ => harness::run_locking_sweep(&cfg)?,
    };
    match &cfg.output {
        Some(p) => write_csv(&result.records, fs::File::create(p)?)?,
        None => write_csv(&result.records, std::io::stdout().lock())?,
    }
    if let Some(p) = &cfg.summary {
        write_summary(&result, p)?;
    }
    if cfg.output.is_some() {
        print_campaign(&result);
    } else {
        // CSV went to stdout; keep the summary off it.
        print_campaign_to_stderr(&result);
    }
    Ok(())
}

fn print_campaign_to_stderr(r: &CampaignResult) {
    for s in &r.summaries {
        let rate = s
            .attack_success_pct
            .map_or("n/a".to_string(), |p| format!("{p:.1}%"));
        eprintln!("{}: runs={} attack_success={}", s.group, s.runs, rate);
    }
}

fn cmd_sat(path: &Path) -> Result<()> {
    let cnf = parse_dimacs(&fs::read_to_string(path)?)?;
    let mut s = Solver::new();
    let mut synced = 0;
    sync_backend(&mut s, &cnf, &mut synced)?;
    let res = s.solve(&[], &Budget::unlimited())?;
    print!("{}", format_solver_output(&res));
    Ok(())
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.cmd {
        Cmd::Lock {
            bench,
            percent,
            seed,
            output,
            record,
        } => cmd_lock(&bench, percent, seed, &output, record)?,
        Cmd::Inject {
            bench,
            subs,
            scenario,
            random,
            seed,
            output,
            record,
        } => cmd_inject(
            &bench,
            &subs,
            scenario.as_deref(),
            random,
            seed,
            &output,
            record,
        )?,
        Cmd::Attack {
            locked,
            oracle,
            record,
            timeout,
            solver,
            trace,
            verify,
        } => cmd_attack(
            &locked,
            &oracle,
            record.as_deref(),
            timeout,
            &solver,
            trace,
            verify,
        )?,
        Cmd::Verify { a, b, key, record } => {
            // Exit status 1 signals non-equivalence, like `cmp`.
            if !cmd_verify(&a, &b, key.as_deref(), record.as_deref())? {
                return Ok(ExitCode::from(1));
            }
        }
        Cmd::Campaign { kind } => cmd_campaign(kind)?,
        Cmd::Sat { cnf } => cmd_sat(&cnf)?,
        Cmd::SearchSpace { l, m } => {
            if l == 0 || m == 0 {
                bail!("L and m must be at least 1");
            }
            println!("{}", search_space_size(l, m));
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
