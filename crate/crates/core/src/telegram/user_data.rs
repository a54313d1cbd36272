//! User data carried by a telegram.
//!
//! The first 50 bits are the telegram header; the 14-bit balise group
//! identifier sits at the same offset as `NID_BG` in the standard header
//! (after `Q_UPDOWN`, `M_VERSION`, `Q_MEDIA`, `N_PIG`, `N_TOTAL`, `M_DUP`,
//! `M_MCOUNT` and `NID_C`). A 32-bit two's-complement location in
//! millimetres follows the header, then an end-of-information marker and zero
//! padding.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::{CodecError, TelegramFormat};
use crate::bits::BitString;

pub const HEADER_BITS: usize = 50;
pub const GROUP_ID_OFFSET: usize = 35;
pub const GROUP_ID_BITS: usize = 14;
pub const LOCATION_OFFSET: usize = HEADER_BITS;
pub const LOCATION_BITS: usize = 32;
pub const END_OF_INFORMATION: u64 = 0xFF;

/// 14-bit balise group identifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u16", into = "u16")]
pub struct BaliseId(u16);

impl BaliseId {
    pub const MAX: u16 = (1 << GROUP_ID_BITS) - 1;

    pub fn new(id: u16) -> Result<Self, CodecError> {
        if id > Self::MAX {
            return Err(CodecError::FieldRange {
                value: id as u64,
                bits: GROUP_ID_BITS as u32,
            });
        }
        Ok(Self(id))
    }

    pub const fn value(self) -> u16 {
        self.0
    }
}

impl TryFrom<u16> for BaliseId {
    type Error = CodecError;

    fn try_from(value: u16) -> Result<Self, Self::Error> {
        Self::new(value)
    }
}

impl From<BaliseId> for u16 {
    fn from(id: BaliseId) -> u16 {
        id.0
    }
}

impl fmt::Display for BaliseId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct UserData {
    format: TelegramFormat,
    bits: BitString,
}

impl UserData {
    pub fn new(format: TelegramFormat, bits: BitString) -> Result<Self, CodecError> {
        if bits.len() != format.user_bits() {
            return Err(CodecError::Format {
                expected: format.user_bits(),
                actual: bits.len(),
            });
        }
        Ok(Self { format, bits })
    }

    /// Builds a payload reporting `location_mm` for balise group `id`.
    pub fn from_fields(format: TelegramFormat, id: BaliseId, location_mm: i32) -> Self {
        let mut bits = BitString::zeros(format.user_bits());
        // Q_UPDOWN = 1: track-to-train
        bits.set(0, true);
        bits.write_uint(GROUP_ID_OFFSET, id.value() as u64, GROUP_ID_BITS);
        bits.write_uint(LOCATION_OFFSET, location_mm as u32 as u64, LOCATION_BITS);
        bits.write_uint(LOCATION_OFFSET + LOCATION_BITS, END_OF_INFORMATION, 8);
        Self { format, bits }
    }

    pub fn format(&self) -> TelegramFormat {
        self.format
    }

    pub fn bits(&self) -> &BitString {
        &self.bits
    }

    pub fn header(&self) -> BitString {
        self.bits.slice(0, HEADER_BITS)
    }

    pub fn balise_group_id(&self) -> BaliseId {
        BaliseId(self.bits.read_uint(GROUP_ID_OFFSET, GROUP_ID_BITS) as u16)
    }

    pub fn reported_location_mm(&self) -> i32 {
        self.bits.read_uint(LOCATION_OFFSET, LOCATION_BITS) as u32 as i32
    }

    pub fn reported_location_m(&self) -> f64 {
        self.reported_location_mm() as f64 / 1000.0
    }

    /// Same payload with the location field rewritten.
    pub fn with_location_mm(&self, location_mm: i32) -> Self {
        let mut bits = self.bits.clone();
        bits.write_uint(LOCATION_OFFSET, location_mm as u32 as u64, LOCATION_BITS);
        Self {
            format: self.format,
            bits,
        }
    }

    /// Format byte followed by the payload packed MSB-first.
    pub fn authenticated_message(&self) -> Vec<u8> {
        let mut msg = Vec::with_capacity(1 + self.format.user_bits().div_ceil(8));
        msg.push(self.format.format_byte());
        msg.extend(self.bits.to_bytes());
        msg
    }
}
