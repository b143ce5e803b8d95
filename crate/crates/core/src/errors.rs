//! Gate-type misreadings on 2-input gates: exhaustive single-error
//! enumeration, seeded multi-error sampling and search-space counting.

use alloc::vec::Vec;

use num_bigint::BigUint;
use num_traits::{One, Zero};
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::circuit::{Circuit, CircuitError, GateId, GateType};

/// Wrong choices per gate: the other five 2-input types.
pub const ERROR_CHOICES: u32 = 5;

/// One misread gate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Substitution {
    pub gate: GateId,
    /// Type in the netlist before the error.
    pub original: GateType,
    pub observed: GateType,
}

/// A set of simultaneous misreadings on distinct gates.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct ErrorScenario {
    pub substitutions: Vec<Substitution>,
}

impl ErrorScenario {
    pub fn new(substitutions: Vec<Substitution>) -> Self {
        ErrorScenario { substitutions }
    }

    /// Number of misread gates (`N`).
    pub fn len(&self) -> usize {
        self.substitutions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.substitutions.is_empty()
    }

    /// The scenario that undoes this one.
    pub fn inverse(&self) -> ErrorScenario {
        ErrorScenario {
            substitutions: self
                .substitutions
                .iter()
                .map(|s| Substitution {
                    gate: s.gate,
                    original: s.observed,
                    observed: s.original,
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ErrorModelError {
    #[error("gate {0} is not a 2-input logic gate")]
    NotTwoInput(u32),
    #[error("gate {gate} is {actual}, scenario expects {expected}")]
    WrongOriginal {
        gate: u32,
        expected: GateType,
        actual: GateType,
    },
    #[error("gate {0} substituted by its own type")]
    Identity(u32),
    #[error("observed type {0} is not a 2-input type")]
    BadObserved(GateType),
    #[error("gate {0} targeted twice")]
    DuplicateGate(u32),
    #[error("multi-error scenarios need at least one substitution")]
    ZeroErrors,
    #[error("{requested} errors requested but only {eligible} gates are eligible")]
    TooManyErrors { requested: usize, eligible: usize },
    #[error(transparent)]
    Circuit(#[from] CircuitError),
}

/// Gates an error may land on: logic gates of a 2-input type with exactly
/// two fan-ins, key gates included.
pub fn eligible_gates(c: &Circuit) -> Vec<GateId> {
    c.ids()
        .filter(|&id| c.kind(id).is_two_input_kind() && c.fanin(id).len() == 2)
        .collect()
}

/// Copy of `c` with the scenario's type labels swapped in. Connectivity and
/// ports are untouched.
pub fn apply_errors(c: &Circuit, s: &ErrorScenario) -> Result<Circuit, ErrorModelError> {
    let mut out = c.clone();
    for (i, sub) in s.substitutions.iter().enumerate() {
        let g = sub.gate;
        if g.index() >= c.len() || !c.kind(g).is_two_input_kind() || c.fanin(g).len() != 2 {
            return Err(ErrorModelError::NotTwoInput(g.0));
        }
        if !sub.observed.is_two_input_kind() {
            return Err(ErrorModelError::BadObserved(sub.observed));
        }
        if c.kind(g) != sub.original {
            return Err(ErrorModelError::WrongOriginal {
                gate: g.0,
                expected: sub.original,
                actual: c.kind(g),
            });
        }
        if sub.observed == sub.original {
            return Err(ErrorModelError::Identity(g.0));
        }
        if s.substitutions[..i].iter().any(|t| t.gate == g) {
            return Err(ErrorModelError::DuplicateGate(g.0));
        }
        out.set_kind(g, sub.observed)?;
    }
    Ok(out)
}

/// Which single-error types to enumerate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ErrorSelection {
    Pair(GateType, GateType),
    /// All 6 × 5 directed pairs.
    All,
}

/// The 30 directed `(from, to)` pairs over the 2-input types.
pub fn all_pairs() -> impl Iterator<Item = (GateType, GateType)> {
    GateType::TWO_INPUT.into_iter().flat_map(|from| {
        GateType::TWO_INPUT
            .into_iter()
            .filter(move |&to| to != from)
            .map(move |to| (from, to))
    })
}

/// One single-gate scenario per eligible gate of type `from`, per selected
/// pair, in gate-id order. Pairs that are not 2-input types or map a type
/// onto itself yield nothing.
pub fn enumerate_single_errors(
    c: &Circuit,
    selection: ErrorSelection,
) -> impl Iterator<Item = ErrorScenario> + '_ {
    let pairs: Vec<(GateType, GateType)> = match selection {
        ErrorSelection::Pair(from, to) => {
            if from != to && from.is_two_input_kind() && to.is_two_input_kind() {
                alloc::vec![(from, to)]
            } else {
                Vec::new()
            }
        }
        ErrorSelection::All => all_pairs().collect(),
    };
    let eligible = eligible_gates(c);
    pairs.into_iter().flat_map(move |(from, to)| {
        eligible
            .clone()
            .into_iter()
            .filter(move |&g| c.kind(g) == from)
            .map(move |gate| ErrorScenario {
                substitutions: alloc::vec![Substitution {
                    gate,
                    original: from,
                    observed: to,
                }],
            })
    })
}

/// `k` scenarios of `n` errors each: `n` distinct eligible gates drawn
/// uniformly, each given a uniformly chosen wrong type. Deterministic for a
/// given seed; substitutions are listed in gate-id order.
pub fn sample_multi_errors(
    c: &Circuit,
    n: usize,
    k: usize,
    seed: u64,
) -> Result<Vec<ErrorScenario>, ErrorModelError> {
    if n == 0 {
        return Err(ErrorModelError::ZeroErrors);
    }
    let eligible = eligible_gates(c);
    if n > eligible.len() {
        return Err(ErrorModelError::TooManyErrors {
            requested: n,
            eligible: eligible.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(k);
    for _ in 0..k {
        let mut picks: Vec<usize> = index::sample(&mut rng, eligible.len(), n).into_vec();
        picks.sort_unstable();
        let substitutions = picks
            .into_iter()
            .map(|i| {
                let gate = eligible[i];
                let original = c.kind(gate);
                let alternatives: Vec<GateType> = GateType::TWO_INPUT
                    .into_iter()
                    .filter(|&t| t != original)
                    .collect();
                let observed = alternatives[rng.gen_range(0..alternatives.len())];
                Substitution {
                    gate,
                    original,
                    observed,
                }
            })
            .collect();
        out.push(ErrorScenario { substitutions });
    }
    Ok(out)
}

/// `Σ_{k=1..L} C(L, k) · m^k`, the number of non-empty error patterns over
/// `L` gates with `m` wrong choices each, summed term by term.
pub fn search_space_size(l: u32, m: u32) -> BigUint {
    let m = BigUint::from(m);
    let mut binom = BigUint::one();
    let mut power = BigUint::one();
    let mut total = BigUint::zero();
    for k in 1..=l {
        binom = binom * BigUint::from(l - k + 1) / BigUint::from(k);
        power *= &m;
        total += &binom * &power;
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::CircuitBuilder;

    fn toy() -> Circuit {
        let mut b = CircuitBuilder::new();
        let a = b.add_input("a").unwrap();
        let bb = b.add_input("b").unwrap();
        let k = b.add_input("keyinput0").unwrap();
        let d = b.add_gate("d", GateType::And, alloc::vec![a, bb]).unwrap();
        let c = b.add_gate("c", GateType::Xor, alloc::vec![d, k]).unwrap();
        b.add_output(c);
        b.build().unwrap()
    }

    #[test]
    fn apply_swaps_labels_only() {
        let c = toy();
        let d = c.find("d").unwrap();
        let s = ErrorScenario::new(alloc::vec![Substitution {
            gate: d,
            original: GateType::And,
            observed: GateType::Nand,
        }]);
        let e = apply_errors(&c, &s).unwrap();
        assert_eq!(e.kind(d), GateType::Nand);
        assert_eq!(e.fanin(d), c.fanin(d));
        assert_eq!(apply_errors(&e, &s.inverse()).unwrap(), c);
        assert_eq!(apply_errors(&c, &ErrorScenario::default()).unwrap(), c);
    }

    #[test]
    fn apply_rejects_bad_scenarios() {
        let c = toy();
        let d = c.find("d").unwrap();
        let a = c.find("a").unwrap();
        let sub = |gate, original, observed| {
            ErrorScenario::new(alloc::vec![Substitution {
                gate,
                original,
                observed
            }])
        };
        assert_eq!(
            apply_errors(&c, &sub(a, GateType::Input, GateType::And)),
            Err(ErrorModelError::NotTwoInput(a.0))
        );
        assert_eq!(
            apply_errors(&c, &sub(d, GateType::And, GateType::And)),
            Err(ErrorModelError::Identity(d.0))
        );
        assert_eq!(
            apply_errors(&c, &sub(d, GateType::And, GateType::Not)),
            Err(ErrorModelError::BadObserved(GateType::Not))
        );
        assert!(matches!(
            apply_errors(&c, &sub(d, GateType::Or, GateType::And)),
            Err(ErrorModelError::WrongOriginal { .. })
        ));
        let mut twice = sub(d, GateType::And, GateType::Or);
        twice.substitutions.push(twice.substitutions[0]);
        assert_eq!(
            apply_errors(&c, &twice),
            Err(ErrorModelError::DuplicateGate(d.0))
        );
    }

    #[test]
    fn single_error_enumeration() {
        let c = toy();
        let xx: Vec<_> =
            enumerate_single_errors(&c, ErrorSelection::Pair(GateType::Xor, GateType::Xnor))
                .collect();
        assert_eq!(xx.len(), 1);
        assert_eq!(xx[0].substitutions[0].gate, c.find("c").unwrap());
        assert_eq!(
            enumerate_single_errors(&c, ErrorSelection::Pair(GateType::Nand, GateType::Nor))
                .count(),
            0
        );
        assert_eq!(
            enumerate_single_errors(&c, ErrorSelection::Pair(GateType::And, GateType::And)).count(),
            0
        );
        assert_eq!(all_pairs().count(), 30);
        assert_eq!(enumerate_single_errors(&c, ErrorSelection::All).count(), 10);
    }

    #[test]
    fn multi_error_sampling() {
        let c = toy();
        assert_eq!(
            sample_multi_errors(&c, 0, 1, 0),
            Err(ErrorModelError::ZeroErrors)
        );
        assert_eq!(
            sample_multi_errors(&c, 3, 1, 0),
            Err(ErrorModelError::TooManyErrors {
                requested: 3,
                eligible: 2
            })
        );
        let s = sample_multi_errors(&c, 2, 20, 9).unwrap();
        assert_eq!(s.len(), 20);
        for sc in &s {
            assert_eq!(sc.len(), 2);
            apply_errors(&c, sc).unwrap();
        }
        assert_eq!(s, sample_multi_errors(&c, 2, 20, 9).unwrap());
    }

    #[test]
    fn search_space_small() {
        assert_eq!(search_space_size(1, 5), BigUint::from(5u32));
        assert_eq!(
            search_space_size(3, 5),
            BigUint::from(3 * 5 + 3 * 25 + 125u32)
        );
    }
}
