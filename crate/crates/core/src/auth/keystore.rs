//! JSON keystore: `{"mk_hex": "<64 hex chars>", "ver": <int>}`.
//!
//! Only the master key is persisted. Balise keys are re-derived on use.

use std::fs;
use std::path::Path;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{derive_keys, BaliseKeyPair, MasterKey, MASTER_KEY_BYTES};
use crate::telegram::BaliseId;

#[derive(Debug, Error)]
pub enum KeystoreError {
    #[error("keystore I/O: {0}")]
    Io(#[from] std::io::Error),
    #[error("keystore JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid keystore: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
struct KeystoreFile {
    mk_hex: String,
    ver: u16,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Keystore {
    pub mk: MasterKey,
    pub ver: u16,
}

impl Keystore {
    /// Fresh master key from the operating system's CSPRNG, or from a
    /// ChaCha20 stream when `seed` is given (tests and reproducible runs).
    pub fn generate(seed: Option<u64>) -> Self {
        let mut bytes = [0u8; MASTER_KEY_BYTES];
        match seed {
            Some(seed) => ChaCha20Rng::seed_from_u64(seed).fill_bytes(&mut bytes),
            None => rand::rngs::OsRng.fill_bytes(&mut bytes),
        }
        Self {
            mk: MasterKey::new(bytes),
            ver: 0,
        }
    }

    pub fn keys_for(&self, id: BaliseId) -> BaliseKeyPair {
        derive_keys(&self.mk, id, self.ver)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&KeystoreFile {
            mk_hex: self.mk.to_hex(),
            ver: self.ver,
        })
        .expect("keystore serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, KeystoreError> {
        let file: KeystoreFile = serde_json::from_str(s)?;
        if file.mk_hex.len() != 2 * MASTER_KEY_BYTES {
            return Err(KeystoreError::Invalid(format!(
                "mk_hex must be {} hex characters",
                2 * MASTER_KEY_BYTES
            )));
        }
        Ok(Self {
            mk: MasterKey::from_hex(&file.mk_hex)?,
            ver: file.ver,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, KeystoreError> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), KeystoreError> {
        fs::write(path, self.to_json())?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeded_generation_is_reproducible() {
        assert_eq!(Keystore::generate(Some(7)), Keystore::generate(Some(7)));
        assert_ne!(Keystore::generate(Some(7)), Keystore::generate(Some(8)));
    }

    #[test]
    fn unseeded_generation_differs() {
        assert_ne!(Keystore::generate(None).mk, Keystore::generate(None).mk);
    }

    #[test]
    fn json_round_trip() {
        let ks = Keystore {
            ver: 5,
            ..Keystore::generate(Some(1))
        };
        let json = ks.to_json();
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(v["mk_hex"].as_str().unwrap().len(), 64);
        assert_eq!(v["ver"], 5);
        assert_eq!(Keystore::from_json(&json).unwrap(), ks);
    }

    #[test]
    fn rejects_short_keys() {
        let err = Keystore::from_json(r#"{"mk_hex": "00ff", "ver": 0}"#).unwrap_err();
        assert!(matches!(err, KeystoreError::Invalid(_)));
        assert!(Keystore::from_json(r#"{"ver": 0}"#).is_err());
    }
}
