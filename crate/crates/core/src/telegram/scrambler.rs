//! Additive LFSR scrambler.
//!
//! A 32-bit Fibonacci register with feedback taps at stages 32, 22, 2 and 1
//! (`x^32 + x^22 + x^2 + x + 1`). Each step emits the stage-32 bit and shifts
//! the feedback in at stage 1. The keystream is XORed onto the data in
//! transmission order, so scrambling and descrambling are the same operation.

use std::fmt;

use super::ScramblingBits;
use crate::bits::BitString;

/// The 32-bit LFSR seed `S`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ScramblingKey(pub u32);

impl ScramblingKey {
    pub const fn value(self) -> u32 {
        self.0
    }
}

impl fmt::Display for ScramblingKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:08x}", self.0)
    }
}

#[derive(Debug, Clone)]
pub struct Lfsr {
    state: u32,
}

impl Lfsr {
    /// A zero seed would lock the register, so it is replaced by 1.
    pub fn new(key: ScramblingKey) -> Self {
        Self {
            state: if key.0 == 0 { 1 } else { key.0 },
        }
    }

    #[inline]
    pub fn next_bit(&mut self) -> bool {
        let s = self.state;
        let out = s >> 31 & 1;
        let fb = (s >> 31 ^ s >> 21 ^ s >> 1 ^ s) & 1;
        self.state = s << 1 | fb;
        out == 1
    }

    pub fn state(&self) -> u32 {
        self.state
    }
}

impl Iterator for Lfsr {
    type Item = bool;

    fn next(&mut self) -> Option<bool> {
        Some(self.next_bit())
    }
}

/// XORs `data` with the keystream seeded by `key`.
pub fn scramble(data: &BitString, key: ScramblingKey) -> BitString {
    data.iter().zip(Lfsr::new(key)).map(|(d, k)| d ^ k).collect()
}

/// Non-cryptographic `sb → S` expansion used by unauthenticated telegrams.
pub fn derive_scrambling_key_legacy(sb: ScramblingBits) -> ScramblingKey {
    let sb = sb.value() as u32;
    let s = (sb << 20 ^ sb << 8 ^ sb) ^ 0x5A5A_5A5A;
    ScramblingKey(if s == 0 { 1 } else { s })
}
