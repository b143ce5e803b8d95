//! JSON sidecars for lock records and error scenarios. Gates are referred
//! to by net name so the files stay valid across re-serialization.

use serde::{Deserialize, Serialize};

use relock_core::circuit::{Circuit, GateType};
use relock_core::errors::{ErrorScenario, Substitution};
use relock_core::locking::{KeyGatePlacement, LockRecord};

use crate::trace::{bits_to_string, parse_bits};

#[derive(Debug, thiserror::Error)]
pub enum RecordError {
    #[error("net `{0}` not found in circuit")]
    UnknownNet(String),
    #[error("bad gate type `{0}`")]
    BadType(String),
    #[error("bad key string `{0}`")]
    BadKey(String),
    #[error("{0} key inputs but {1} key bits")]
    KeyLength(usize, usize),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlacementJson {
    pub wire: String,
    pub kind: String,
    pub key_gate: String,
    pub key_input: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LockJson {
    pub percent: f64,
    pub seed: u64,
    /// Correct key, one character per key bit in key order.
    pub key: String,
    pub key_inputs: Vec<String>,
    pub placements: Vec<PlacementJson>,
}

impl LockJson {
    pub fn from_record(locked: &Circuit, r: &LockRecord) -> Self {
        LockJson {
            percent: r.percent,
            seed: r.seed,
            key: bits_to_string(&r.correct_key),
            key_inputs: r
                .key_input_ids
                .iter()
                .map(|&k| locked.name(k).to_string())
                .collect(),
            placements: r
                .placements
                .iter()
                .map(|p| PlacementJson {
                    wire: p.wire.clone(),
                    kind: p.kind.keyword().into(),
                    key_gate: locked.name(p.key_gate).into(),
                    key_input: locked.name(p.key_input).into(),
                })
                .collect(),
        }
    }

    pub fn to_record(&self, locked: &Circuit) -> Result<LockRecord, RecordError> {
        let find = |n: &str| {
            locked
                .find(n)
                .ok_or_else(|| RecordError::UnknownNet(n.into()))
        };
        let correct_key =
            parse_bits(&self.key).ok_or_else(|| RecordError::BadKey(self.key.clone()))?;
        if correct_key.len() != self.key_inputs.len() {
            return Err(RecordError::KeyLength(
                self.key_inputs.len(),
                correct_key.len(),
            ));
        }
        let placements = self
            .placements
            .iter()
            .map(|p| {
                Ok(KeyGatePlacement {
                    wire: p.wire.clone(),
                    kind: parse_type(&p.kind)?,
                    key_gate: find(&p.key_gate)?,
                    key_input: find(&p.key_input)?,
                })
            })
            .collect::<Result<_, RecordError>>()?;
        Ok(LockRecord {
            key_input_ids: self
                .key_inputs
                .iter()
                .map(|n| find(n))
                .collect::<Result<_, _>>()?,
            correct_key,
            placements,
            percent: self.percent,
            seed: self.seed,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubstitutionJson {
    pub gate: String,
    pub true_type: String,
    pub observed_type: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScenarioJson {
    pub substitutions: Vec<SubstitutionJson>,
}

impl ScenarioJson {
    pub fn from_scenario(c: &Circuit, s: &ErrorScenario) -> Self {
        ScenarioJson {
            substitutions: s
                .substitutions
                .iter()
                .map(|x| SubstitutionJson {
                    gate: c.name(x.gate).into(),
                    true_type: x.original.keyword().into(),
                    observed_type: x.observed.keyword().into(),
                })
                .collect(),
        }
    }

    pub fn to_scenario(&self, c: &Circuit) -> Result<ErrorScenario, RecordError> {
        let substitutions = self
            .substitutions
            .iter()
            .map(|s| {
                Ok(Substitution {
                    gate: c
                        .find(&s.gate)
                        .ok_or_else(|| RecordError::UnknownNet(s.gate.clone()))?,
                    original: parse_type(&s.true_type)?,
                    observed: parse_type(&s.observed_type)?,
                })
            })
            .collect::<Result<_, RecordError>>()?;
        Ok(ErrorScenario { substitutions })
    }
}

fn parse_type(s: &str) -> Result<GateType, RecordError> {
    GateType::from_keyword(s).ok_or_else(|| RecordError::BadType(s.into()))
}

/// Key inputs of a locked netlist without a sidecar: primary inputs named
/// `keyinput<n>`, ordered by `n`.
pub fn key_inputs_by_name(c: &Circuit) -> Vec<relock_core::GateId> {
    let prefix = relock_core::locking::KEY_INPUT_PREFIX;
    let mut keys: Vec<(u64, relock_core::GateId)> = c
        .inputs()
        .iter()
        .filter_map(|&i| {
            let n = c.name(i).strip_prefix(prefix)?.parse().ok()?;
            Some((n, i))
        })
        .collect();
    keys.sort();
    keys.into_iter().map(|(_, i)| i).collect()
}
