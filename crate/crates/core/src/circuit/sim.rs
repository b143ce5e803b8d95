//! Bit-parallel logic simulation.

use alloc::vec;
use alloc::vec::Vec;

use super::{Circuit, GateId, GateType};

/// Largest input count accepted by [`Circuit::truth_table`].
pub const MAX_TRUTH_TABLE_INPUTS: usize = 24;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SimError {
    #[error("pattern has {got} bits, circuit has {expected} primary inputs")]
    LengthMismatch { expected: usize, got: usize },
    #[error("{0} inputs exceed the truth-table limit of {MAX_TRUTH_TABLE_INPUTS}")]
    TooManyInputs(usize),
    #[error("evaluation order is not a topological order of the circuit")]
    BadOrder,
}

/// Complete input/output table. Row `r` assigns primary input `j` the bit
/// `(r >> (M - 1 - j)) & 1`, so the first input is the most significant.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TruthTable {
    num_inputs: usize,
    /// One bitset of `2^M` rows per primary output.
    columns: Vec<Vec<u64>>,
}

impl TruthTable {
    pub fn num_inputs(&self) -> usize {
        self.num_inputs
    }

    pub fn num_outputs(&self) -> usize {
        self.columns.len()
    }

    pub fn num_rows(&self) -> usize {
        1usize << self.num_inputs
    }

    pub fn output(&self, row: usize, output: usize) -> bool {
        self.columns[output][row / 64] >> (row % 64) & 1 == 1
    }

    pub fn row(&self, row: usize) -> Vec<bool> {
        (0..self.columns.len())
            .map(|o| self.output(row, o))
            .collect()
    }

    /// Input assignment of a row, in primary-input order.
    pub fn row_inputs(&self, row: usize) -> Vec<bool> {
        row_to_pattern(row, self.num_inputs)
    }

    /// First row on which the two tables differ.
    pub fn first_difference(&self, other: &TruthTable) -> Option<usize> {
        if self.num_inputs != other.num_inputs || self.columns.len() != other.columns.len() {
            return Some(0);
        }
        for (a, b) in self.columns.iter().zip(&other.columns) {
            for (w, (x, y)) in a.iter().zip(b).enumerate() {
                let d = x ^ y;
                if d != 0 {
                    return Some(w * 64 + d.trailing_zeros() as usize);
                }
            }
        }
        None
    }
}

/// Input pattern for truth-table row `row` (first input most significant).
pub fn row_to_pattern(row: usize, num_inputs: usize) -> Vec<bool> {
    (0..num_inputs)
        .map(|j| row >> (num_inputs - 1 - j) & 1 == 1)
        .collect()
}

const LOW_PATTERNS: [u64; 6] = [
    0xAAAA_AAAA_AAAA_AAAA,
    0xCCCC_CCCC_CCCC_CCCC,
    0xF0F0_F0F0_F0F0_F0F0,
    0xFF00_FF00_FF00_FF00,
    0xFFFF_0000_FFFF_0000,
    0xFFFF_FFFF_0000_0000,
];

impl Circuit {
    /// Evaluates every node for 64 patterns at once. `pi_words[j]` carries
    /// the patterns of primary input `j`; the result is indexed by gate id.
    pub fn eval_nodes(&self, pi_words: &[u64]) -> Result<Vec<u64>, SimError> {
        self.eval_nodes_in(self.topo_order(), pi_words)
    }

    /// Same as [`Circuit::eval_nodes`] with a caller-supplied evaluation
    /// order, which must be topological.
    pub fn eval_nodes_in(&self, order: &[GateId], pi_words: &[u64]) -> Result<Vec<u64>, SimError> {
        if pi_words.len() != self.num_inputs() {
            return Err(SimError::LengthMismatch {
                expected: self.num_inputs(),
                got: pi_words.len(),
            });
        }
        if order.len() != self.len() {
            return Err(SimError::BadOrder);
        }
        let mut values = vec![0u64; self.len()];
        let mut done = vec![false; self.len()];
        for (&id, &w) in self.inputs().iter().zip(pi_words) {
            values[id.index()] = w;
        }
        for &id in order {
            let g = self.gate(id);
            if g.fanin.iter().any(|f| !done[f.index()]) || done[id.index()] {
                return Err(SimError::BadOrder);
            }
            if g.kind != GateType::Input {
                values[id.index()] = g.kind.eval_words(g.fanin.iter().map(|f| values[f.index()]));
            }
            done[id.index()] = true;
        }
        Ok(values)
    }

    /// Output words for 64 patterns at once.
    pub fn simulate_words(&self, pi_words: &[u64]) -> Result<Vec<u64>, SimError> {
        let values = self.eval_nodes(pi_words)?;
        Ok(self.outputs().iter().map(|o| values[o.index()]).collect())
    }

    /// Output pattern for one input pattern (aligned to `inputs()` / `outputs()`).
    pub fn simulate(&self, x: &[bool]) -> Result<Vec<bool>, SimError> {
        let words: Vec<u64> = x.iter().map(|&b| if b { 1 } else { 0 }).collect();
        Ok(self
            .simulate_words(&words)?
            .into_iter()
            .map(|w| w & 1 == 1)
            .collect())
    }

    /// All `2^M` rows; refused above [`MAX_TRUTH_TABLE_INPUTS`].
    pub fn truth_table(&self) -> Result<TruthTable, SimError> {
        let m = self.num_inputs();
        if m > MAX_TRUTH_TABLE_INPUTS {
            return Err(SimError::TooManyInputs(m));
        }
        let rows = 1usize << m;
        let words = rows.div_ceil(64);
        let tail_mask = if rows.is_multiple_of(64) {
            !0u64
        } else {
            (1u64 << rows) - 1
        };
        let mut columns = vec![vec![0u64; words]; self.num_outputs()];
        let mut pi = vec![0u64; m];
        for w in 0..words {
            for (j, slot) in pi.iter_mut().enumerate() {
                let bit = m - 1 - j;
                *slot = if bit < 6 {
                    LOW_PATTERNS[bit]
                } else if (w >> (bit - 6)) & 1 == 1 {
                    !0
                } else {
                    0
                };
            }
            let out = self.simulate_words(&pi)?;
            for (col, v) in columns.iter_mut().zip(out) {
                col[w] = if w + 1 == words { v & tail_mask } else { v };
            }
        }
        Ok(TruthTable {
            num_inputs: m,
            columns,
        })
    }
}
