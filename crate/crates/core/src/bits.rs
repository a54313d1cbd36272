//! Ordered bit sequences in transmission order.
//!
//! Index 0 is the leftmost bit, i.e. `b_{n-1}` of an `n`-bit telegram, and is
//! transmitted first. Integers are written and read MSB-first.

use std::fmt;
use std::ops::Index;
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
#[error("invalid bit character {0:?} at position {1}")]
pub struct ParseBitsError(pub char, pub usize);

#[derive(Clone, Default, PartialEq, Eq, Hash)]
pub struct BitString {
    bits: Vec<bool>,
}

impl BitString {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_capacity(n: usize) -> Self {
        Self {
            bits: Vec::with_capacity(n),
        }
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            bits: vec![false; n],
        }
    }

    pub fn from_bools(bits: Vec<bool>) -> Self {
        Self { bits }
    }

    /// Unpacks the first `len` bits of `bytes`, MSB-first.
    pub fn from_bytes(bytes: &[u8], len: usize) -> Self {
        assert!(len <= bytes.len() * 8, "not enough bytes for {len} bits");
        let bits = (0..len)
            .map(|i| (bytes[i / 8] >> (7 - i % 8)) & 1 == 1)
            .collect();
        Self { bits }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn get(&self, i: usize) -> bool {
        self.bits[i]
    }

    pub fn set(&mut self, i: usize, value: bool) {
        self.bits[i] = value;
    }

    pub fn flip(&mut self, i: usize) {
        self.bits[i] = !self.bits[i];
    }

    pub fn push(&mut self, bit: bool) {
        self.bits.push(bit);
    }

    pub fn extend_from(&mut self, other: &BitString) {
        self.bits.extend_from_slice(&other.bits);
    }

    /// Appends the low `width` bits of `value`, most significant first.
    pub fn push_uint(&mut self, value: u64, width: usize) {
        assert!(width <= 64);
        for k in (0..width).rev() {
            self.bits.push((value >> k) & 1 == 1);
        }
    }

    /// Reads `width` bits starting at `offset` as an unsigned integer.
    pub fn read_uint(&self, offset: usize, width: usize) -> u64 {
        assert!(width <= 64);
        self.bits[offset..offset + width]
            .iter()
            .fold(0u64, |acc, &b| (acc << 1) | b as u64)
    }

    /// Overwrites `width` bits starting at `offset` with `value`.
    pub fn write_uint(&mut self, offset: usize, value: u64, width: usize) {
        assert!(width <= 64);
        for k in 0..width {
            self.bits[offset + k] = (value >> (width - 1 - k)) & 1 == 1;
        }
    }

    pub fn slice(&self, start: usize, end: usize) -> BitString {
        Self {
            bits: self.bits[start..end].to_vec(),
        }
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.bits
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        self.bits.iter().copied()
    }

    /// Packs MSB-first, zero-padding the final byte.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = vec![0u8; self.bits.len().div_ceil(8)];
        for (i, &b) in self.bits.iter().enumerate() {
            if b {
                out[i / 8] |= 0x80 >> (i % 8);
            }
        }
        out
    }

    pub fn inverted(&self) -> BitString {
        Self {
            bits: self.bits.iter().map(|b| !b).collect(),
        }
    }

    /// Rotates left by `k`: the result starts with bit `k` of `self`.
    pub fn rotated_left(&self, k: usize) -> BitString {
        let mut bits = self.bits.clone();
        if !bits.is_empty() {
            bits.rotate_left(k % self.bits.len());
        }
        Self { bits }
    }

    /// Concatenates `times` copies, as a balise transmits its telegram cyclically.
    pub fn repeated(&self, times: usize) -> BitString {
        let mut bits = Vec::with_capacity(self.bits.len() * times);
        for _ in 0..times {
            bits.extend_from_slice(&self.bits);
        }
        Self { bits }
    }

    pub fn count_ones(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn to_01_string(&self) -> String {
        self.bits.iter().map(|&b| if b { '1' } else { '0' }).collect()
    }
}

impl Index<usize> for BitString {
    type Output = bool;

    fn index(&self, i: usize) -> &bool {
        &self.bits[i]
    }
}

impl FromIterator<bool> for BitString {
    fn from_iter<I: IntoIterator<Item = bool>>(iter: I) -> Self {
        Self {
            bits: iter.into_iter().collect(),
        }
    }
}

impl FromStr for BitString {
    type Err = ParseBitsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.chars()
            .enumerate()
            .map(|(i, c)| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(ParseBitsError(other, i)),
            })
            .collect::<Result<Vec<_>, _>>()
            .map(Self::from_bools)
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_01_string())
    }
}

impl fmt::Debug for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.bits.len() <= 64 {
            write!(f, "BitString({})", self.to_01_string())
        } else {
            write!(
                f,
                "BitString({}…, len={})",
                self.slice(0, 32).to_01_string(),
                self.bits.len()
            )
        }
    }
}
