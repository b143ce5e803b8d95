//! Experiment configuration (TOML file, overridable from the command line).

use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use relock_core::circuit::GateType;
use relock_core::errors::{all_pairs, ErrorSelection};

use super::HarnessError;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    #[default]
    Embedded,
    External,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub benchmark: PathBuf,
    /// Locking fraction in (0, 1].
    pub percent: f64,
    /// One lock per seed.
    pub seeds: Vec<u64>,
    /// Single-error pairs such as `xor->xnor`, or `all`.
    pub pairs: Vec<String>,
    /// Error counts for multi-error campaigns.
    pub ns: Vec<usize>,
    /// Scenarios per N.
    pub k: usize,
    pub error_seed: u64,
    /// Locking fractions for sweeps.
    pub percents: Vec<f64>,
    pub timeout_secs: Option<f64>,
    /// Per-solver-call conflict cap, a clock-free alternative to timeouts.
    pub conflict_limit: Option<u64>,
    pub solver: SolverKind,
    /// External solver command; falls back to `RELOCK_SOLVER`.
    pub solver_command: Option<String>,
    pub output: Option<PathBuf>,
    pub summary: Option<PathBuf>,
    pub threads: Option<usize>,
    /// Fill the `wall_ms` column (makes CSVs run-dependent).
    pub record_wall_time: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            benchmark: PathBuf::new(),
            percent: 0.05,
            seeds: vec![0],
            pairs: vec!["all".into()],
            ns: vec![2, 4, 8],
            k: 100,
            error_seed: 0,
            percents: vec![0.05, 0.10, 0.15, 0.20, 0.25],
            timeout_secs: None,
            conflict_limit: None,
            solver: SolverKind::Embedded,
            solver_command: None,
            output: None,
            summary: None,
            threads: None,
            record_wall_time: false,
        }
    }
}

fn check_fraction(p: f64) -> Result<(), HarnessError> {
    if p > 0.0 && p <= 1.0 {
        Ok(())
    } else {
        Err(HarnessError::Config(format!(
            "locking fraction {p} is outside (0, 1]"
        )))
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, HarnessError> {
        toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))
    }

    /// Reads a config file; a relative benchmark path is resolved against
    /// the file's directory.
    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::from_toml(&text)?;
        if cfg.benchmark.is_relative() {
            if let Some(dir) = path.parent() {
                cfg.benchmark = dir.join(&cfg.benchmark);
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        check_fraction(self.percent)?;
        if self.k == 0 {
            return Err(HarnessError::Config("K must be at least 1".into()));
        }
        if self.seeds.is_empty() {
            return Err(HarnessError::Config(
                "at least one lock seed is required".into(),
            ));
        }
        if self.ns.contains(&0) {
            return Err(HarnessError::Config("N must be at least 1".into()));
        }
        if self
            .timeout_secs
            .is_some_and(|t| !(t > 0.0 && t.is_finite()))
        {
            return Err(HarnessError::Config(
                "timeout must be a positive number of seconds".into(),
            ));
        }
        self.selections()?;
        Ok(())
    }

    pub fn timeout(&self) -> Option<Duration> {
        self.timeout_secs.map(Duration::from_secs_f64)
    }

    pub fn selections(&self) -> Result<Vec<ErrorSelection>, HarnessError> {
        let mut out = Vec::new();
        for p in &self.pairs {
            if p.eq_ignore_ascii_case("all") {
                out.extend(all_pairs().map(|(a, b)| ErrorSelection::Pair(a, b)));
            } else {
                let (a, b) = parse_pair(p)?;
                out.push(ErrorSelection::Pair(a, b));
            }
        }
        if out.is_empty() {
            return Err(HarnessError::Config("no error pairs selected".into()));
        }
        Ok(out)
    }

    pub fn check_percents(&self) -> Result<(), HarnessError> {
        if self.percents.is_empty() {
            return Err(HarnessError::Config(
                "sweep needs at least one locking fraction".into(),
            ));
        }
        self.percents.iter().try_for_each(|&p| check_fraction(p))
    }

    pub fn check_multi(&self) -> Result<(), HarnessError> {
        if self.ns.is_empty() || self.ns.iter().any(|&n| n < 2) {
            return Err(HarnessError::Config(
                "multi-error campaigns need every N >= 2".into(),
            ));
        }
        Ok(())
    }
}

/// Parses `from->to` (or `from:to`) over the six 2-input types.
pub fn parse_pair(s: &str) -> Result<(GateType, GateType), HarnessError> {
    let bad = || HarnessError::Config(format!("bad error pair `{s}` (expected e.g. `xor->xnor`)"));
    let (a, b) = s
        .split_once("->")
        .or_else(|| s.split_once(':'))
        .ok_or_else(bad)?;
    let a = GateType::from_keyword(a.trim()).ok_or_else(bad)?;
    let b = GateType::from_keyword(b.trim()).ok_or_else(bad)?;
    if a == b || !a.is_two_input_kind() || !b.is_two_input_kind() {
        return Err(bad());
    }
    Ok((a, b))
}

pub fn pair_label(a: GateType, b: GateType) -> String {
    format!(
        "{}->{}",
        a.keyword().to_ascii_lowercase(),
        b.keyword().to_ascii_lowercase()
    )
}
