//! Cyclic-code check bits over GF(2).

use serde::{Deserialize, Serialize};

use super::CodecError;
use crate::bits::BitString;

/// Width of the check field, equal to the generator degree.
pub const CHECK_BITS: usize = 85;

const MASK: u128 = (1u128 << CHECK_BITS) - 1;

/// Exponents of the default degree-85 generator.
///
/// Not the standard's polynomial (which is not reproduced here); any degree-85
/// polynomial with a nonzero constant term detects every single-bit error and
/// is interchangeable through [`GeneratorPolynomial::from_exponents`].
pub const DEFAULT_EXPONENTS: [u32; 22] = [
    85, 83, 78, 77, 71, 64, 62, 57, 51, 46, 42, 37, 31, 25, 22, 17, 13, 8, 6, 3, 1, 0,
];

/// A binary polynomial `x^85 + ... + 1`.
///
/// Only the 85 low coefficients are stored; the leading term is implicit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<u32>", into = "Vec<u32>")]
pub struct GeneratorPolynomial {
    low: u128,
}

impl GeneratorPolynomial {
    pub fn from_exponents(exponents: &[u32]) -> Result<Self, CodecError> {
        let mut low = 0u128;
        let mut has_leading = false;
        for &e in exponents {
            match e as usize {
                CHECK_BITS => {
                    if has_leading {
                        return Err(CodecError::InvalidPolynomial(format!(
                            "duplicate exponent {e}"
                        )));
                    }
                    has_leading = true;
                }
                k if k < CHECK_BITS => {
                    if low & (1 << k) != 0 {
                        return Err(CodecError::InvalidPolynomial(format!(
                            "duplicate exponent {e}"
                        )));
                    }
                    low |= 1 << k;
                }
                _ => {
                    return Err(CodecError::InvalidPolynomial(format!(
                        "exponent {e} exceeds degree {CHECK_BITS}"
                    )))
                }
            }
        }
        if !has_leading {
            return Err(CodecError::InvalidPolynomial(format!(
                "degree must be exactly {CHECK_BITS}"
            )));
        }
        if low & 1 == 0 {
            return Err(CodecError::InvalidPolynomial(
                "constant coefficient must be 1".into(),
            ));
        }
        Ok(Self { low })
    }

    pub fn exponents(&self) -> Vec<u32> {
        let mut out = vec![CHECK_BITS as u32];
        out.extend((0..CHECK_BITS as u32).rev().filter(|k| self.low >> k & 1 == 1));
        out
    }

    /// `reg * x mod g` for a reduced remainder `reg`.
    #[inline]
    pub(crate) fn mul_x(&self, reg: u128) -> u128 {
        let top = reg >> (CHECK_BITS - 1) & 1;
        let shifted = (reg << 1) & MASK;
        if top == 1 {
            shifted ^ self.low
        } else {
            shifted
        }
    }

    /// `(reg * x + bit) mod g`.
    #[inline]
    pub(crate) fn push_bit(&self, reg: u128, bit: bool) -> u128 {
        self.mul_x(reg) ^ bit as u128
    }

    /// Remainder of `bits` (leftmost = highest degree) modulo the generator.
    pub fn remainder(&self, bits: &[bool]) -> u128 {
        bits.iter().fold(0, |reg, &b| self.push_bit(reg, b))
    }

    /// `x^k mod g`.
    pub fn x_pow_mod(&self, k: usize) -> u128 {
        (0..k).fold(1, |reg, _| self.mul_x(reg))
    }

    /// Systematic check field: `prefix * x^85 mod g`, returned as 85 bits.
    pub fn check_bits(&self, prefix: &BitString) -> BitString {
        let mut reg = self.remainder(prefix.as_slice());
        for _ in 0..CHECK_BITS {
            reg = self.mul_x(reg);
        }
        (0..CHECK_BITS)
            .rev()
            .map(|k| reg >> k & 1 == 1)
            .collect()
    }

    pub fn divides(&self, bits: &BitString) -> bool {
        self.remainder(bits.as_slice()) == 0
    }
}

impl Default for GeneratorPolynomial {
    fn default() -> Self {
        Self::from_exponents(&DEFAULT_EXPONENTS).expect("default generator is well-formed")
    }
}

impl TryFrom<Vec<u32>> for GeneratorPolynomial {
    type Error = CodecError;

    fn try_from(value: Vec<u32>) -> Result<Self, Self::Error> {
        Self::from_exponents(&value)
    }
}

impl From<GeneratorPolynomial> for Vec<u32> {
    fn from(g: GeneratorPolynomial) -> Self {
        g.exponents()
    }
}
