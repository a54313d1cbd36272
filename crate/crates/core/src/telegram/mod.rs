//! Eurobalise-style telegram coding.
//!
//! A telegram of `n` bits is laid out left to right as
//!
//! ```text
//! | shaped data | cb (3) | sb (12) | esb (10) | check bits (85) |
//! ```
//!
//! with `n = 1023` (long) or `n = 341` (short). Encoding scrambles the user
//! bits with an LFSR keystream seeded from a 32-bit key `S`, maps every 10-bit
//! block through a 1024-word substitution alphabet of 11-bit words, and
//! appends a cyclic-code remainder so the whole telegram is divisible by the
//! generator polynomial. Decoding slides a window over a cyclically repeated
//! bitstream until the parity, repetition and alphabet checks all pass.

mod check;
mod codec;
mod decoder;
mod scrambler;
mod substitution;
mod user_data;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use check::{GeneratorPolynomial, CHECK_BITS, DEFAULT_EXPONENTS};
pub use codec::{Codec, Telegram, TelegramFile, TelegramFileError};
pub use decoder::{AlignedTelegram, WINDOW_FALLBACK_SHIFTS};
pub use scrambler::{derive_scrambling_key_legacy, scramble, Lfsr, ScramblingKey};
pub use substitution::SubstitutionTable;
pub use user_data::{
    BaliseId, UserData, END_OF_INFORMATION, GROUP_ID_BITS, GROUP_ID_OFFSET, HEADER_BITS,
    LOCATION_BITS, LOCATION_OFFSET,
};

pub const CONTROL_BITS: usize = 3;
pub const SCRAMBLING_BITS: usize = 12;
pub const EXTRA_SHAPING_BITS: usize = 10;

/// Control bits `b109 b108 b107`: inversion bit 0, spare bits 0 and 1.
pub const CONTROL_BITS_VALUE: u8 = 0b001;

/// Fixed extra shaping bits.
pub const EXTRA_SHAPING_VALUE: u16 = 0b01_0101_0101;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CodecError {
    #[error("11-bit word {0:#05x} is not in the substitution alphabet")]
    InvalidWord(u16),
    #[error("substitution index {0} out of range (must be < 1024)")]
    IndexOutOfRange(u16),
    #[error("expected {expected} bits, got {actual}")]
    Format { expected: usize, actual: usize },
    #[error("no telegram found in stream")]
    NoTelegramFound,
    #[error("control bits {0:#05b} after alignment, expected 0b001")]
    ControlBitError(u8),
    #[error("value {value} does not fit in {bits} bits")]
    FieldRange { value: u64, bits: u32 },
    #[error("invalid substitution table: {0}")]
    InvalidTable(String),
    #[error("invalid generator polynomial: {0}")]
    InvalidPolynomial(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TelegramFormat {
    Long,
    Short,
}

impl TelegramFormat {
    pub const ALL: [TelegramFormat; 2] = [TelegramFormat::Long, TelegramFormat::Short];

    /// Total telegram length.
    pub const fn n(self) -> usize {
        match self {
            TelegramFormat::Long => 1023,
            TelegramFormat::Short => 341,
        }
    }

    pub const fn shaped_bits(self) -> usize {
        match self {
            TelegramFormat::Long => 913,
            TelegramFormat::Short => 231,
        }
    }

    pub const fn user_bits(self) -> usize {
        match self {
            TelegramFormat::Long => 830,
            TelegramFormat::Short => 210,
        }
    }

    /// Extra bits beyond `n` that the decoding window must see repeated.
    pub const fn r_init(self) -> usize {
        match self {
            TelegramFormat::Long => 77,
            TelegramFormat::Short => 121,
        }
    }

    pub const fn words(self) -> usize {
        self.user_bits() / 10
    }

    /// Domain byte prepended to the user data when it is authenticated.
    pub const fn format_byte(self) -> u8 {
        match self {
            TelegramFormat::Long => 0x01,
            TelegramFormat::Short => 0x02,
        }
    }

    pub(crate) const fn cb_offset(self) -> usize {
        self.shaped_bits()
    }

    pub(crate) const fn sb_offset(self) -> usize {
        self.cb_offset() + CONTROL_BITS
    }

    pub(crate) const fn esb_offset(self) -> usize {
        self.sb_offset() + SCRAMBLING_BITS
    }

    pub(crate) const fn check_offset(self) -> usize {
        self.esb_offset() + EXTRA_SHAPING_BITS
    }
}

impl fmt::Display for TelegramFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TelegramFormat::Long => f.write_str("long"),
            TelegramFormat::Short => f.write_str("short"),
        }
    }
}

impl std::str::FromStr for TelegramFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "long" => Ok(TelegramFormat::Long),
            "short" => Ok(TelegramFormat::Short),
            other => Err(format!("unknown telegram format {other:?}")),
        }
    }
}

/// The 12-bit scrambling-bits field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ScramblingBits(u16);

impl ScramblingBits {
    pub const MAX: u16 = (1 << SCRAMBLING_BITS) - 1;

    pub fn new(value: u16) -> Result<Self, CodecError> {
        if value > Self::MAX {
            return Err(CodecError::FieldRange {
                value: value as u64,
                bits: SCRAMBLING_BITS as u32,
            });
        }
        Ok(Self(value))
    }

    /// Keeps the low 12 bits.
    pub const fn truncate(value: u16) -> Self {
        Self(value & Self::MAX)
    }

    pub const fn value(self) -> u16 {
        self.0
    }
}

impl fmt::Display for ScramblingBits {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:03x}", self.0)
    }
}
