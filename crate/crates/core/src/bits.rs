use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Longest string supported; far beyond anything the SDPs can handle.
pub const MAX_BITS: usize = 16;

/// A fixed-length binary string indexed by measurement round.
///
/// Round 1 is the leftmost character and the most significant bit. Input
/// strings use `1` for the noisy X setting and `0` for noisy Z; outcome
/// strings use `0` for +1 and `1` for -1.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BitString {
    len: u8,
    bits: u32,
}

impl BitString {
    pub fn new(len: usize, bits: u32) -> Self {
        assert!(len <= MAX_BITS, "bit string too long");
        assert!(len == 32 || bits < (1u32 << len), "bits exceed length");
        Self {
            len: len as u8,
            bits,
        }
    }

    pub fn empty() -> Self {
        Self { len: 0, bits: 0 }
    }

    pub fn from_bits(bits: &[u8]) -> Self {
        let mut s = Self::empty();
        for &b in bits {
            s = s.push(b);
        }
        s
    }

    pub fn len(&self) -> usize {
        self.len as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Integer value; also the dense index among all strings of this length.
    pub fn value(&self) -> usize {
        self.bits as usize
    }

    /// Bit for round `i` (0-based).
    pub fn get(&self, i: usize) -> u8 {
        assert!(i < self.len(), "round {i} out of range");
        ((self.bits >> (self.len() - 1 - i)) & 1) as u8
    }

    /// The first `j` rounds.
    pub fn prefix(&self, j: usize) -> Self {
        assert!(j <= self.len());
        Self::new(j, self.bits >> (self.len() - j))
    }

    pub fn push(&self, bit: u8) -> Self {
        Self::new(self.len() + 1, (self.bits << 1) | (bit as u32 & 1))
    }

    /// The last round's bit.
    pub fn last(&self) -> u8 {
        self.get(self.len() - 1)
    }

    /// All `2^len` strings in increasing (lexicographic) order.
    pub fn all(len: usize) -> impl Iterator<Item = BitString> {
        (0..1u32 << len).map(move |b| BitString::new(len, b))
    }

    pub fn bits(&self) -> impl Iterator<Item = u8> + '_ {
        (0..self.len()).map(|i| self.get(i))
    }

    /// Outcome signs `±1` for an outcome string.
    pub fn signs(&self) -> Vec<i8> {
        self.bits().map(|b| if b == 0 { 1 } else { -1 }).collect()
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.bits() {
            write!(f, "{b}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "\"{self}\"")
    }
}

impl FromStr for BitString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.len() > MAX_BITS {
            return Err(Error::Parse(format!("bit string {s:?} too long")));
        }
        s.chars().try_fold(BitString::empty(), |acc, c| match c {
            '0' => Ok(acc.push(0)),
            '1' => Ok(acc.push(1)),
            _ => Err(Error::Parse(format!(
                "invalid character {c:?} in bit string {s:?}"
            ))),
        })
    }
}

impl Serialize for BitString {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for BitString {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
