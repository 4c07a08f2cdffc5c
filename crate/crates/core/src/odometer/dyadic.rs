use std::fmt;

use crate::error::{Error, Result};
use crate::toeplitz::mask;

/// A dyadic integer known modulo `2^precision`.
///
/// Text form is the bit string LSB first, e.g. `101000` is 5 at precision 6.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct DyadicInt {
    value: u64,
    precision: u32,
}

impl DyadicInt {
    pub const MAX_PRECISION: u32 = 64;

    /// `value mod 2^precision`.
    pub fn new(value: u64, precision: u32) -> Result<Self> {
        if precision == 0 || precision > Self::MAX_PRECISION {
            return Err(Error::invalid(format!(
                "precision must be in 1..={}, got {precision}",
                Self::MAX_PRECISION
            )));
        }
        Ok(DyadicInt {
            value: value & mask(precision),
            precision,
        })
    }

    pub fn zero(precision: u32) -> Result<Self> {
        Self::new(0, precision)
    }

    /// From bits, least significant first.
    pub fn from_bits(bits: &[bool]) -> Result<Self> {
        let value = bits
            .iter()
            .enumerate()
            .fold(0u64, |acc, (i, &b)| acc | ((b as u64) << i));
        Self::new(value, bits.len() as u32)
    }

    pub fn value(&self) -> u64 {
        self.value
    }

    pub fn precision(&self) -> u32 {
        self.precision
    }

    pub fn bits(&self) -> Vec<bool> {
        (0..self.precision)
            .map(|i| self.value >> i & 1 == 1)
            .collect()
    }

    pub fn bit(&self, i: u32) -> Option<bool> {
        (i < self.precision).then(|| self.value >> i & 1 == 1)
    }

    /// `x ↦ x + 1` modulo `2^precision`.
    pub fn add_one(&self) -> Self {
        self.add(1)
    }

    pub fn add(&self, n: u64) -> Self {
        DyadicInt {
            value: self.value.wrapping_add(n) & mask(self.precision),
            precision: self.precision,
        }
    }

    /// The additive inverse modulo `2^precision`.
    pub fn neg(&self) -> Self {
        DyadicInt {
            value: self.value.wrapping_neg() & mask(self.precision),
            precision: self.precision,
        }
    }

    /// First `k` digits.
    pub fn truncate(&self, k: u32) -> Result<Self> {
        if k > self.precision {
            return Err(Error::InsufficientPrecision(format!(
                "cannot truncate precision {} to {k}",
                self.precision
            )));
        }
        Self::new(self.value, k)
    }
}

impl fmt::Display for DyadicInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.precision {
            f.write_str(if self.value >> i & 1 == 1 { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl std::str::FromStr for DyadicInt {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bits = s
            .trim()
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                _ => Err(Error::invalid(format!("bad bit {c:?}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_bits(&bits)
    }
}
