//! Telegram authentication without telegram expansion.
//!
//! Each balise gets a key pair `(k0, k1)` derived from a line master key.
//! The 12-bit scrambling-bits field carries a truncated MAC of the user data
//! under `k0`, and the 32-bit scrambler seed is a truncated PRF of that tag
//! under `k1`. A reader with the keys recomputes both; anyone else can only
//! guess the tag.
//!
//! All three primitives (key derivation, MAC, PRF) are HMAC-SHA-256, kept apart
//! by the first message byte:
//!
//! | use | message |
//! |-----|---------|
//! | key derivation | `0x4B ‖ id (2 B, BE) ‖ ver (2 B, BE) ‖ i` |
//! | MAC | `format byte (0x01 long, 0x02 short) ‖ user bits packed MSB-first` |
//! | PRF | `0x53 ‖ sb left-aligned in 2 bytes` |
//!
//! Truncation keeps the most significant bits of the HMAC output.

mod keystore;

use std::fmt;

use hmac::{Hmac, Mac};
use sha2::Sha256;
use thiserror::Error;

pub use keystore::{Keystore, KeystoreError};

use crate::bits::BitString;
use crate::telegram::{
    AlignedTelegram, BaliseId, Codec, CodecError, ScramblingBits, ScramblingKey, Telegram,
    TelegramFormat, UserData,
};

type HmacSha256 = Hmac<Sha256>;

const KDF_DOMAIN: u8 = 0x4B;
const PRF_DOMAIN: u8 = 0x53;

pub const MASTER_KEY_BYTES: usize = 32;
pub const BALISE_KEY_BYTES: usize = 16;

/// The 12-bit tag stored in the scrambling-bits field.
pub type AuthTag = ScramblingBits;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum VerifyError {
    #[error("authentication tag mismatch (received {received}, expected {expected})")]
    AuthFailure {
        received: AuthTag,
        expected: AuthTag,
    },
    #[error(transparent)]
    Codec(#[from] CodecError),
}

impl VerifyError {
    pub fn is_auth_failure(&self) -> bool {
        matches!(self, VerifyError::AuthFailure { .. })
    }
}

fn hmac(key: &[u8], parts: &[&[u8]]) -> [u8; 32] {
    let mut mac = HmacSha256::new_from_slice(key).expect("HMAC accepts any key length");
    for part in parts {
        mac.update(part);
    }
    mac.finalize().into_bytes().into()
}

/// 256-bit line master key.
#[derive(Clone, PartialEq, Eq)]
pub struct MasterKey([u8; MASTER_KEY_BYTES]);

impl MasterKey {
    pub fn new(bytes: [u8; MASTER_KEY_BYTES]) -> Self {
        Self(bytes)
    }

    pub fn from_hex(s: &str) -> Result<Self, KeystoreError> {
        let bytes = hex::decode(s).map_err(|e| KeystoreError::Invalid(e.to_string()))?;
        let bytes: [u8; MASTER_KEY_BYTES] = bytes.try_into().map_err(|v: Vec<u8>| {
            KeystoreError::Invalid(format!(
                "master key must be {MASTER_KEY_BYTES} bytes, got {}",
                v.len()
            ))
        })?;
        Ok(Self(bytes))
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }

    pub fn as_bytes(&self) -> &[u8; MASTER_KEY_BYTES] {
        &self.0
    }
}

impl fmt::Debug for MasterKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("MasterKey(..)")
    }
}

/// Per-balise keys: `k0` for the tag MAC, `k1` for the scrambler-seed PRF.
#[derive(Clone, PartialEq, Eq)]
pub struct BaliseKeyPair {
    id: BaliseId,
    ver: u16,
    k0: [u8; BALISE_KEY_BYTES],
    k1: [u8; BALISE_KEY_BYTES],
}

impl BaliseKeyPair {
    pub fn id(&self) -> BaliseId {
        self.id
    }

    pub fn version(&self) -> u16 {
        self.ver
    }

    pub fn k0(&self) -> &[u8; BALISE_KEY_BYTES] {
        &self.k0
    }

    pub fn k1(&self) -> &[u8; BALISE_KEY_BYTES] {
        &self.k1
    }

    /// Leading 12 bits of `MAC(k0, format byte ‖ U)`.
    pub fn tag(&self, user: &UserData) -> AuthTag {
        let mac = hmac(&self.k0, &[&user.authenticated_message()]);
        ScramblingBits::truncate(u16::from(mac[0]) << 4 | u16::from(mac[1]) >> 4)
    }

    /// Leading 32 bits of `PRF(k1, 0x53 ‖ sb)`.
    pub fn scrambling_key(&self, sb: AuthTag) -> ScramblingKey {
        let msg = (sb.value() << 4).to_be_bytes();
        let out = hmac(&self.k1, &[&[PRF_DOMAIN], &msg]);
        ScramblingKey(u32::from_be_bytes([out[0], out[1], out[2], out[3]]))
    }
}

impl fmt::Debug for BaliseKeyPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BaliseKeyPair")
            .field("id", &self.id)
            .field("ver", &self.ver)
            .finish_non_exhaustive()
    }
}

/// `k_i` = leading 128 bits of `HMAC(mk, 0x4B ‖ id ‖ ver ‖ i)`.
pub fn derive_keys(mk: &MasterKey, id: BaliseId, ver: u16) -> BaliseKeyPair {
    let derive = |i: u8| -> [u8; BALISE_KEY_BYTES] {
        let out = hmac(
            mk.as_bytes(),
            &[
                &[KDF_DOMAIN],
                &id.value().to_be_bytes(),
                &ver.to_be_bytes(),
                &[i],
            ],
        );
        out[..BALISE_KEY_BYTES].try_into().expect("slice length")
    };
    BaliseKeyPair {
        id,
        ver,
        k0: derive(0),
        k1: derive(1),
    }
}

pub fn generate_tag(user: &UserData, keys: &BaliseKeyPair) -> (AuthTag, ScramblingKey) {
    let sb = keys.tag(user);
    (sb, keys.scrambling_key(sb))
}

pub fn encode_authenticated(
    codec: &Codec,
    user: &UserData,
    keys: &BaliseKeyPair,
) -> Result<Telegram, CodecError> {
    let (sb, s) = generate_tag(user, keys);
    codec.encode(user, sb, s)
}

/// Descrambles an aligned telegram under the PRF-derived seed and checks the tag.
pub fn verify_aligned(aligned: &AlignedTelegram, keys: &BaliseKeyPair) -> Result<UserData, VerifyError> {
    let received = aligned.scrambling_bits();
    let user = aligned.descramble(keys.scrambling_key(received));
    let expected = keys.tag(&user);
    if expected != received {
        return Err(VerifyError::AuthFailure { received, expected });
    }
    Ok(user)
}

pub fn verify_and_decode(
    codec: &Codec,
    stream: &BitString,
    keys: &BaliseKeyPair,
    format: TelegramFormat,
) -> Result<UserData, VerifyError> {
    let aligned = codec.align(stream, format)?;
    verify_aligned(&aligned, keys)
}
