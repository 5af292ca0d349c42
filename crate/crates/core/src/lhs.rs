//! Causal deterministic strategies `D(b⃗|y⃗, λ⃗)`: the local-hidden-state
//! models against which steering is tested.

use crate::bits::BitString;
use crate::error::{Error, Result};

/// Enumeration guard; the strategy count grows as `∏_{i≤k} 2^(2^i)`.
pub const MAX_STRATEGY_ROUNDS: usize = 3;

/// Deterministic map from input strings to outcome strings.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DeterministicStrategy {
    round: usize,
    /// `table[y.value()]` is the outcome string for input `y`.
    table: Vec<BitString>,
}

impl DeterministicStrategy {
    /// Rejects tables where some `b_i` depends on inputs after round `i`.
    pub fn from_table(round: usize, table: Vec<BitString>) -> Result<Self> {
        if table.len() != 1 << round {
            return Err(Error::LengthMismatch {
                expected: 1 << round,
                got: table.len(),
            });
        }
        if let Some(b) = table.iter().find(|b| b.len() != round) {
            return Err(Error::LengthMismatch {
                expected: round,
                got: b.len(),
            });
        }
        if !is_causal(round, &table) {
            return Err(Error::InvalidConfig(
                "strategy table is not causal: an outcome depends on a later input".into(),
            ));
        }
        Ok(Self { round, table })
    }

    pub fn round(&self) -> usize {
        self.round
    }

    pub fn output(&self, y: BitString) -> BitString {
        self.table[y.value()]
    }

    pub fn table(&self) -> &[BitString] {
        &self.table
    }

    /// `D(b⃗|y⃗)`: 1 when the strategy answers `b` to `y`.
    pub fn evaluate(&self, b: BitString, y: BitString) -> Result<u8> {
        for s in [b, y] {
            if s.len() != self.round {
                return Err(Error::LengthMismatch {
                    expected: self.round,
                    got: s.len(),
                });
            }
        }
        Ok(u8::from(self.output(y) == b))
    }
}

/// True when every `b_i` is a function of `y_1 … y_i` only.
pub fn is_causal(round: usize, table: &[BitString]) -> bool {
    for (y1, b1) in table.iter().enumerate() {
        for (y2, b2) in table.iter().enumerate().skip(y1 + 1) {
            let (y1, y2) = (
                BitString::new(round, y1 as u32),
                BitString::new(round, y2 as u32),
            );
            for i in 0..round {
                if y1.prefix(i + 1) == y2.prefix(i + 1) && b1.get(i) != b2.get(i) {
                    return false;
                }
            }
        }
    }
    true
}

/// All causal deterministic strategies for `k` rounds.
///
/// Round `i` contributes a Boolean function of the first `i` inputs, encoded
/// as a `2^i`-bit truth table; strategies are all combinations of those.
pub fn enumerate_strategies(k: usize) -> Result<Vec<DeterministicStrategy>> {
    if k == 0 || k > MAX_STRATEGY_ROUNDS {
        return Err(Error::TooManyRounds {
            requested: k,
            max: MAX_STRATEGY_ROUNDS,
        });
    }
    let sizes: Vec<u64> = (1..=k).map(|i| 1u64 << (1u64 << i)).collect();
    let total: u64 = sizes.iter().product();
    let mut out = Vec::with_capacity(total as usize);
    for mut code in 0..total {
        let mut truth_tables = Vec::with_capacity(k);
        for &s in &sizes {
            truth_tables.push(code % s);
            code /= s;
        }
        let table = BitString::all(k)
            .map(|y| {
                (0..k).fold(BitString::empty(), |b, i| {
                    let arg = y.prefix(i + 1).value();
                    b.push(((truth_tables[i] >> arg) & 1) as u8)
                })
            })
            .collect();
        out.push(DeterministicStrategy { round: k, table });
    }
    Ok(out)
}
