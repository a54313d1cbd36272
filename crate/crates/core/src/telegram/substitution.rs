//! 10-bit to 11-bit substitution alphabet.

use serde::{Deserialize, Serialize};

use super::CodecError;

pub const ALPHABET_SIZE: usize = 1024;
const WORD_SPACE: usize = 1 << 11;
const NOT_IN_ALPHABET: u16 = u16::MAX;

/// Bijection between 10-bit indices and a sorted set of 1024 11-bit words.
///
/// The default alphabet is the 1024 smallest 11-bit words with between four
/// and seven ones, which keeps every transmitted word roughly DC balanced.
/// A conformant table can be loaded with [`SubstitutionTable::from_words`].
#[derive(Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<u16>", into = "Vec<u16>")]
pub struct SubstitutionTable {
    words: Vec<u16>,
    inverse: Vec<u16>,
}

impl SubstitutionTable {
    pub fn from_words(words: Vec<u16>) -> Result<Self, CodecError> {
        if words.len() != ALPHABET_SIZE {
            return Err(CodecError::InvalidTable(format!(
                "expected {ALPHABET_SIZE} entries, got {}",
                words.len()
            )));
        }
        if let Some(&w) = words.iter().find(|&&w| w as usize >= WORD_SPACE) {
            return Err(CodecError::InvalidTable(format!(
                "entry {w} is wider than 11 bits"
            )));
        }
        if let Some(pair) = words.windows(2).find(|p| p[0] >= p[1]) {
            return Err(CodecError::InvalidTable(format!(
                "entries must be strictly increasing ({} then {})",
                pair[0], pair[1]
            )));
        }
        let mut inverse = vec![NOT_IN_ALPHABET; WORD_SPACE];
        for (i, &w) in words.iter().enumerate() {
            inverse[w as usize] = i as u16;
        }
        Ok(Self { words, inverse })
    }

    pub fn substitute(&self, block: u16) -> Result<u16, CodecError> {
        self.words
            .get(block as usize)
            .copied()
            .ok_or(CodecError::IndexOutOfRange(block))
    }

    pub fn desubstitute(&self, word: u16) -> Result<u16, CodecError> {
        match self.inverse.get(word as usize) {
            Some(&i) if i != NOT_IN_ALPHABET => Ok(i),
            _ => Err(CodecError::InvalidWord(word)),
        }
    }

    #[inline]
    pub fn contains(&self, word: u16) -> bool {
        self.inverse
            .get(word as usize)
            .is_some_and(|&i| i != NOT_IN_ALPHABET)
    }

    pub fn words(&self) -> &[u16] {
        &self.words
    }
}

impl Default for SubstitutionTable {
    fn default() -> Self {
        let words = (0..WORD_SPACE as u16)
            .filter(|w| (4..=7).contains(&w.count_ones()))
            .take(ALPHABET_SIZE)
            .collect();
        Self::from_words(words).expect("default alphabet is well-formed")
    }
}

impl TryFrom<Vec<u16>> for SubstitutionTable {
    type Error = CodecError;

    fn try_from(words: Vec<u16>) -> Result<Self, Self::Error> {
        Self::from_words(words)
    }
}

impl From<SubstitutionTable> for Vec<u16> {
    fn from(t: SubstitutionTable) -> Self {
        t.words
    }
}

impl std::fmt::Debug for SubstitutionTable {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SubstitutionTable")
            .field("first", &self.words[0])
            .field("last", &self.words[ALPHABET_SIZE - 1])
            .finish()
    }
}
