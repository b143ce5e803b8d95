//! DIMACS CNF files and SAT-competition style external solvers.

use std::io::{Read, Write};
use std::path::Path;
use std::process::{Command, Stdio};
use std::thread;
use std::time::{Duration, Instant};

use relock_core::cnf::{CnfInstance, Lit};
use relock_core::sat::{Budget, SatBackend, SatError, SolveResult};

/// Environment variable naming the external solver command (split on
/// whitespace; the DIMACS path is appended as the last argument).
pub const SOLVER_ENV: &str = "RELOCK_SOLVER";

#[derive(Debug, thiserror::Error)]
pub enum DimacsError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("solver output has no `s` line")]
    NoStatus,
    #[error("unknown solver status `{0}`")]
    BadStatus(String),
    #[error("bad model literal `{0}`")]
    BadModel(String),
    #[error("solver `{command}` failed: {msg}")]
    Process { command: String, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub fn write_dimacs<W: Write>(
    cnf: &CnfInstance,
    assumptions: &[Lit],
    mut w: W,
) -> std::io::Result<()> {
    writeln!(
        w,
        "p cnf {} {}",
        cnf.num_vars(),
        cnf.num_clauses() + assumptions.len()
    )?;
    let mut line = String::new();
    for c in cnf
        .clauses()
        .iter()
        .map(Vec::as_slice)
        .chain(assumptions.chunks(1))
    {
        line.clear();
        for l in c {
            line.push_str(&l.to_dimacs().to_string());
            line.push(' ');
        }
        line.push('0');
        writeln!(w, "{line}")?;
    }
    Ok(())
}

pub fn to_dimacs(cnf: &CnfInstance) -> String {
    let mut buf = Vec::new();
    write_dimacs(cnf, &[], &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("ascii")
}

/// Parses a DIMACS CNF file. Clauses may span lines; `c` lines and a
/// trailing `%` marker are ignored.
pub fn parse_dimacs(text: &str) -> Result<CnfInstance, DimacsError> {
    let mut cnf = CnfInstance::new();
    let mut header: Option<(usize, usize)> = None;
    let mut clause: Vec<Lit> = Vec::new();
    let mut seen = 0usize;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let s = raw.trim();
        if s.is_empty() || s.starts_with('c') {
            continue;
        }
        if s.starts_with('%') {
            break;
        }
        let err = |msg: String| DimacsError::Syntax { line, msg };
        if s.starts_with('p') {
            let f: Vec<&str> = s.split_whitespace().collect();
            if header.is_some() || f.len() != 4 || f[1] != "cnf" {
                return Err(err(format!("bad header `{s}`")));
            }
            let v = f[2]
                .parse()
                .map_err(|_| err(format!("bad variable count `{}`", f[2])))?;
            let c = f[3]
                .parse()
                .map_err(|_| err(format!("bad clause count `{}`", f[3])))?;
            while cnf.num_vars() < v {
                cnf.new_var();
            }
            header = Some((v, c));
            continue;
        }
        let (vars, _) = header.ok_or_else(|| err("clause before `p cnf` header".into()))?;
        for tok in s.split_whitespace() {
            let d: i64 = tok
                .parse()
                .map_err(|_| err(format!("bad literal `{tok}`")))?;
            if d == 0 {
                cnf.add_clause(&clause).map_err(|e| err(e.to_string()))?;
                clause.clear();
                seen += 1;
                continue;
            }
            if d.unsigned_abs() as usize > vars {
                return Err(err(format!(
                    "literal {d} exceeds declared {vars} variables"
                )));
            }
            clause.push(Lit::from_dimacs(d).expect("nonzero"));
        }
    }
    if !clause.is_empty() {
        return Err(DimacsError::Syntax {
            line: text.lines().count(),
            msg: "last clause is not terminated by 0".into(),
        });
    }
    if let Some((_, declared)) = header {
        if declared != seen {
            return Err(DimacsError::Syntax {
                line: 1,
                msg: format!("header declares {declared} clauses, found {seen}"),
            });
        }
    }
    Ok(cnf)
}

/// Reads `s SATISFIABLE` / `s UNSATISFIABLE` / `s UNKNOWN` and `v` lines.
/// Variables the model omits default to false.
pub fn parse_solver_output(text: &str, num_vars: usize) -> Result<SolveResult, DimacsError> {
    let mut status = None;
    let mut model = vec![false; num_vars];
    for line in text.lines() {
        let line = line.trim();
        if let Some(s) = line.strip_prefix("s ") {
            status = Some(s.trim().to_string());
        } else if let Some(v) = line
            .strip_prefix("v ")
            .or_else(|| (line == "v").then_some(""))
        {
            for tok in v.split_whitespace() {
                let d: i64 = tok.parse().map_err(|_| DimacsError::BadModel(tok.into()))?;
                if d == 0 {
                    continue;
                }
                let idx = d.unsigned_abs() as usize - 1;
                if idx >= num_vars {
                    return Err(DimacsError::BadModel(tok.into()));
                }
                model[idx] = d > 0;
            }
        }
    }
    match status.as_deref() {
        Some("SATISFIABLE") => Ok(SolveResult::Sat(model)),
        Some("UNSATISFIABLE") => Ok(SolveResult::Unsat),
        Some("UNKNOWN") | Some("INDETERMINATE") => Ok(SolveResult::Timeout {
            elapsed: Duration::ZERO,
        }),
        Some(other) => Err(DimacsError::BadStatus(other.into())),
        None => Err(DimacsError::NoStatus),
    }
}

/// Competition-format answer, as printed by `relock sat`.
pub fn format_solver_output(res: &SolveResult) -> String {
    match res {
        SolveResult::Sat(m) => {
            let mut s = String::from("s SATISFIABLE\nv");
            for (i, &b) in m.iter().enumerate() {
                let d = i as i64 + 1;
                s.push_str(&format!(" {}", if b { d } else { -d }));
            }
            s.push_str(" 0\n");
            s
        }
        SolveResult::Unsat => "s UNSATISFIABLE\n".into(),
        SolveResult::Timeout { .. } => "s UNKNOWN\n".into(),
    }
}

/// Splits the solver command taken from [`SOLVER_ENV`], if set.
pub fn solver_command_from_env() -> Option<Vec<String>> {
    let raw = std::env::var(SOLVER_ENV).ok()?;
    let parts: Vec<String> = raw.split_whitespace().map(String::from).collect();
    (!parts.is_empty()).then_some(parts)
}

/// Runs `command <path>` and parses its answer. The process is killed when
/// `deadline` passes.
pub fn solve_external(
    path: &Path,
    command: &[String],
    num_vars: usize,
    deadline: Option<Instant>,
) -> Result<SolveResult, DimacsError> {
    let started = Instant::now();
    let shown = command.join(" ");
    let (prog, args) = command.split_first().ok_or_else(|| DimacsError::Process {
        command: shown.clone(),
        msg: "empty command".into(),
    })?;
    let mut child = Command::new(prog)
        .args(args)
        .arg(path)
        .stdin(Stdio::null())
        .stdout(Stdio::piped())
        .stderr(Stdio::null())
        .spawn()
        .map_err(|e| DimacsError::Process {
            command: shown.clone(),
            msg: e.to_string(),
        })?;
    let mut stdout = child.stdout.take().expect("piped");
    let reader = thread::spawn(move || {
        let mut s = String::new();
        stdout.read_to_string(&mut s).map(|_| s)
    });
    loop {
        if child.try_wait()?.is_some() {
            break;
        }
        if deadline.is_some_and(|d| Instant::now() >= d) {
            let _ = child.kill();
            let _ = child.wait();
            return Ok(SolveResult::Timeout {
                elapsed: started.elapsed(),
            });
        }
        thread::sleep(Duration::from_millis(2));
    }
    let out = reader.join().expect("reader thread")?;
    parse_solver_output(&out, num_vars).map_err(|e| match e {
        DimacsError::NoStatus => DimacsError::Process {
            command: shown,
            msg: "no `s` line in output".into(),
        },
        other => other,
    })
}

/// [`SatBackend`] that writes the accumulated clauses (plus assumptions as
/// unit clauses) to a temporary DIMACS file and runs an external solver on
/// every query. Not incremental, but interchangeable with the embedded one.
pub struct ExternalSolver {
    command: Vec<String>,
    cnf: CnfInstance,
    dir: tempfile::TempDir,
    /// Wall-clock origin the budget's deadline is measured from.
    origin: Instant,
}

impl ExternalSolver {
    pub fn new(command: Vec<String>) -> std::io::Result<Self> {
        Ok(ExternalSolver {
            command,
            cnf: CnfInstance::new(),
            dir: tempfile::tempdir()?,
            origin: Instant::now(),
        })
    }

    /// Anchors budget deadlines to `origin` (the clock's zero).
    pub fn with_origin(mut self, origin: Instant) -> Self {
        self.origin = origin;
        self
    }
}

impl SatBackend for ExternalSolver {
    fn num_vars(&self) -> usize {
        self.cnf.num_vars()
    }

    fn reserve_vars(&mut self, n: usize) {
        while self.cnf.num_vars() < n {
            self.cnf.new_var();
        }
    }

    fn add_clause(&mut self, clause: &[Lit]) -> Result<(), SatError> {
        if clause.is_empty() {
            // Keep the instance unsatisfiable without an empty DIMACS line.
            self.cnf.add_falsum();
            return Ok(());
        }
        self.cnf.add_clause(clause).map_err(|_| {
            let bad = clause
                .iter()
                .find(|l| l.var().index() >= self.cnf.num_vars())
                .unwrap();
            SatError::Unallocated {
                lit: bad.to_dimacs(),
                allocated: self.cnf.num_vars(),
            }
        })
    }

    fn solve(&mut self, assumptions: &[Lit], budget: &Budget<'_>) -> Result<SolveResult, SatError> {
        if let Some(bad) = assumptions
            .iter()
            .find(|l| l.var().index() >= self.cnf.num_vars())
        {
            return Err(SatError::Unallocated {
                lit: bad.to_dimacs(),
                allocated: self.cnf.num_vars(),
            });
        }
        if budget.time_exhausted() {
            return Ok(SolveResult::Timeout {
                elapsed: budget.elapsed(),
            });
        }
        let path = self.dir.path().join("query.cnf");
        let backend = |e: std::io::Error| SatError::Backend(e.to_string());
        let file = std::fs::File::create(&path).map_err(backend)?;
        write_dimacs(&self.cnf, assumptions, std::io::BufWriter::new(file)).map_err(backend)?;
        let deadline = budget.deadline().map(|d| self.origin + d);
        let res = solve_external(&path, &self.command, self.cnf.num_vars(), deadline)
            .map_err(|e| SatError::Backend(e.to_string()))?;
        if let SolveResult::Sat(m) = &res {
            if !self.cnf.is_satisfied_by(m) || !assumptions.iter().all(|l| l.eval(m)) {
                return Err(SatError::Backend(
                    "external model does not satisfy the formula".into(),
                ));
            }
        }
        Ok(res)
    }
}
