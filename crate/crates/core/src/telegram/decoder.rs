//! Sliding-window telegram decoder.
//!
//! A window of `n + r` received bits is accepted when
//!
//! 1. its first `n` bits are divisible by the generator polynomial,
//! 2. its last `r` bits repeat its first `r` bits, and
//! 3. every 11-bit word of the shaped data is in the alphabet.
//!
//! Otherwise the window moves on by one bit. The parity remainder is updated
//! in O(1) per shift. Each window is tried as received and bit-inverted; the
//! inversion bit decides which polarity is genuine.

use super::scrambler::{scramble, ScramblingKey};
use super::user_data::UserData;
use super::{Codec, CodecError, ScramblingBits, Telegram, TelegramFormat, CONTROL_BITS_VALUE};
use crate::bits::BitString;

/// After this many shifts the repetition check covers a whole telegram.
pub const WINDOW_FALLBACK_SHIFTS: usize = 7500;

/// A telegram located in a stream, before descrambling.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AlignedTelegram {
    telegram: Telegram,
    scrambled: BitString,
    shift: usize,
    inverted: bool,
}

impl AlignedTelegram {
    /// The telegram in normal polarity.
    pub fn telegram(&self) -> &Telegram {
        &self.telegram
    }

    pub fn scrambling_bits(&self) -> ScramblingBits {
        self.telegram.scrambling_bits()
    }

    /// Offset of the accepted window in the stream.
    pub fn shift(&self) -> usize {
        self.shift
    }

    pub fn inverted(&self) -> bool {
        self.inverted
    }

    pub fn descramble(&self, key: ScramblingKey) -> UserData {
        UserData::new(self.telegram.format(), scramble(&self.scrambled, key))
            .expect("desubstituted length matches format")
    }
}

impl Codec {
    /// Finds the first window passing all checks and verifies its control bits.
    pub fn align(
        &self,
        stream: &BitString,
        format: TelegramFormat,
    ) -> Result<AlignedTelegram, CodecError> {
        let n = format.n();
        let bits = stream.as_slice();
        if bits.len() < n + format.r_init() {
            return Err(CodecError::NoTelegramFound);
        }
        let x_n = self.poly.x_pow_mod(n);
        let ones = self.poly.remainder(&vec![true; n]);
        let mut rem = self.poly.remainder(&bits[..n]);
        let mut shift = 0;
        loop {
            let r = if shift > WINDOW_FALLBACK_SHIFTS { n } else { format.r_init() };
            if shift + n + r > bits.len() {
                return Err(CodecError::NoTelegramFound);
            }
            let window = &bits[shift..shift + n];
            let candidates = [false, true]
                .into_iter()
                .filter(|&inv| (if inv { rem ^ ones } else { rem }) == 0)
                .filter(|_| bits[shift + n..shift + n + r] == bits[shift..shift + r])
                .filter(|&inv| self.words_valid(window, format, inv))
                .collect::<Vec<_>>();
            if !candidates.is_empty() {
                return self.accept(window, format, shift, &candidates);
            }
            rem = self.poly.mul_x(rem) ^ if bits[shift] { x_n } else { 0 } ^ bits[shift + n] as u128;
            shift += 1;
        }
    }

    fn words_valid(&self, window: &[bool], format: TelegramFormat, inverted: bool) -> bool {
        window[..format.shaped_bits()].chunks_exact(11).all(|w| {
            let word = w.iter().fold(0u16, |acc, &b| acc << 1 | (b ^ inverted) as u16);
            self.table.contains(word)
        })
    }

    fn accept(
        &self,
        window: &[bool],
        format: TelegramFormat,
        shift: usize,
        polarities: &[bool],
    ) -> Result<AlignedTelegram, CodecError> {
        let mut last_cb = 0;
        for &inverted in polarities {
            let bits: BitString = window.iter().map(|&b| b ^ inverted).collect();
            let telegram = Telegram::from_bits(format, bits)?;
            let cb = telegram.control_bits();
            if cb != CONTROL_BITS_VALUE {
                last_cb = cb;
                continue;
            }
            let mut scrambled = BitString::with_capacity(format.user_bits());
            for word in telegram.words() {
                scrambled.push_uint(self.table.desubstitute(word)? as u64, 10);
            }
            return Ok(AlignedTelegram {
                telegram,
                scrambled,
                shift,
                inverted,
            });
        }
        Err(CodecError::ControlBitError(last_cb))
    }

    /// Aligns, derives `S` from the received `sb` with `derive_key`, and
    /// descrambles.
    pub fn decode_stream<F>(
        &self,
        stream: &BitString,
        format: TelegramFormat,
        derive_key: F,
    ) -> Result<(UserData, ScramblingBits), CodecError>
    where
        F: FnOnce(ScramblingBits) -> ScramblingKey,
    {
        let aligned = self.align(stream, format)?;
        let sb = aligned.scrambling_bits();
        Ok((aligned.descramble(derive_key(sb)), sb))
    }
}
