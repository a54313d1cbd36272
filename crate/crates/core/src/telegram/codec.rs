use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use super::check::GeneratorPolynomial;
use super::scrambler::{scramble, ScramblingKey};
use super::substitution::SubstitutionTable;
use super::user_data::UserData;
use super::{
    CodecError, ScramblingBits, TelegramFormat, CONTROL_BITS, CONTROL_BITS_VALUE,
    EXTRA_SHAPING_BITS, EXTRA_SHAPING_VALUE, SCRAMBLING_BITS,
};
use crate::bits::BitString;

/// A complete `n`-bit telegram.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Telegram {
    format: TelegramFormat,
    bits: BitString,
}

impl Telegram {
    pub fn from_bits(format: TelegramFormat, bits: BitString) -> Result<Self, CodecError> {
        if bits.len() != format.n() {
            return Err(CodecError::Format {
                expected: format.n(),
                actual: bits.len(),
            });
        }
        Ok(Self { format, bits })
    }

    pub fn format(&self) -> TelegramFormat {
        self.format
    }

    pub fn bits(&self) -> &BitString {
        &self.bits
    }

    pub fn into_bits(self) -> BitString {
        self.bits
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn shaped_data(&self) -> BitString {
        self.bits.slice(0, self.format.shaped_bits())
    }

    /// `b109 b108 b107` as a 3-bit value.
    pub fn control_bits(&self) -> u8 {
        self.bits.read_uint(self.format.cb_offset(), CONTROL_BITS) as u8
    }

    pub fn scrambling_bits(&self) -> ScramblingBits {
        ScramblingBits::truncate(self.bits.read_uint(self.format.sb_offset(), SCRAMBLING_BITS) as u16)
    }

    pub fn extra_shaping_bits(&self) -> u16 {
        self.bits.read_uint(self.format.esb_offset(), EXTRA_SHAPING_BITS) as u16
    }

    pub fn check_bits(&self) -> BitString {
        self.bits.slice(self.format.check_offset(), self.format.n())
    }

    /// The 11-bit words of the shaped data.
    pub fn words(&self) -> impl Iterator<Item = u16> + '_ {
        (0..self.format.words()).map(|i| self.bits.read_uint(11 * i, 11) as u16)
    }

    /// The bitstream a reader sees when passing over the balise: `copies`
    /// back-to-back transmissions starting `offset` bits into the telegram.
    pub fn transmission(&self, offset: usize, copies: usize) -> BitString {
        self.bits.rotated_left(offset).repeated(copies)
    }

    pub fn to_file(&self) -> TelegramFile {
        TelegramFile {
            format: self.format,
            bits: self.bits.to_01_string(),
        }
    }
}

/// On-disk representation: `{"format": "long"|"short", "bits": "0101..."}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TelegramFile {
    pub format: TelegramFormat,
    pub bits: String,
}

impl TelegramFile {
    pub fn into_telegram(self) -> Result<Telegram, TelegramFileError> {
        let bits: BitString = self.bits.parse()?;
        Ok(Telegram::from_bits(self.format, bits)?)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum TelegramFileError {
    #[error(transparent)]
    Bits(#[from] crate::bits::ParseBitsError),
    #[error(transparent)]
    Codec(#[from] CodecError),
}

/// Substitution alphabet and generator polynomial used to code telegrams.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Codec {
    pub(super) table: SubstitutionTable,
    pub(super) poly: GeneratorPolynomial,
}

impl Codec {
    pub fn new(table: SubstitutionTable, poly: GeneratorPolynomial) -> Self {
        Self { table, poly }
    }

    /// Process-wide default codec.
    pub fn shared() -> &'static Codec {
        static CODEC: OnceLock<Codec> = OnceLock::new();
        CODEC.get_or_init(Codec::default)
    }

    pub fn table(&self) -> &SubstitutionTable {
        &self.table
    }

    pub fn polynomial(&self) -> &GeneratorPolynomial {
        &self.poly
    }

    /// Scrambles, substitutes and appends control, scrambling, extra shaping
    /// and check bits. `sb` is stored verbatim; `key` seeds the scrambler.
    pub fn encode(
        &self,
        user: &UserData,
        sb: ScramblingBits,
        key: ScramblingKey,
    ) -> Result<Telegram, CodecError> {
        self.encode_bits(user.format(), user.bits(), sb, key)
    }

    pub fn encode_bits(
        &self,
        format: TelegramFormat,
        user_bits: &BitString,
        sb: ScramblingBits,
        key: ScramblingKey,
    ) -> Result<Telegram, CodecError> {
        if user_bits.len() != format.user_bits() {
            return Err(CodecError::Format {
                expected: format.user_bits(),
                actual: user_bits.len(),
            });
        }
        let scrambled = scramble(user_bits, key);
        let mut bits = BitString::with_capacity(format.n());
        for i in 0..format.words() {
            let block = scrambled.read_uint(10 * i, 10) as u16;
            bits.push_uint(self.table.substitute(block)? as u64, 11);
        }
        bits.push_uint(CONTROL_BITS_VALUE as u64, CONTROL_BITS);
        bits.push_uint(sb.value() as u64, SCRAMBLING_BITS);
        bits.push_uint(EXTRA_SHAPING_VALUE as u64, EXTRA_SHAPING_BITS);
        let check = self.poly.check_bits(&bits);
        bits.extend_from(&check);
        Telegram::from_bits(format, bits)
    }
}
