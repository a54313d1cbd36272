//! Trackside balises, attacker actions and the on-board reader.

use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::SimError;
use crate::auth::{encode_authenticated, verify_aligned, BaliseKeyPair, Keystore};
use crate::telegram::{
    derive_scrambling_key_legacy, BaliseId, Codec, ScramblingBits, Telegram, TelegramFormat,
    UserData,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaliseKind {
    /// Location reference.
    Fixed,
    /// Stop marker at the stopping point.
    Controlled,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrackEntry {
    pub id: u16,
    pub loc: f64,
    pub kind: BaliseKind,
}

/// Ordered list of installed balises, ending with the stop marker at 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TrackMap {
    entries: Vec<TrackEntry>,
}

impl Default for TrackMap {
    fn default() -> Self {
        let entries = [(1, -100.0), (2, -64.0), (3, -36.0), (4, -16.0), (5, -4.0)]
            .into_iter()
            .map(|(id, loc)| TrackEntry {
                id,
                loc,
                kind: BaliseKind::Fixed,
            })
            .chain(std::iter::once(TrackEntry {
                id: 6,
                loc: 0.0,
                kind: BaliseKind::Controlled,
            }))
            .collect();
        Self { entries }
    }
}

impl TrackMap {
    pub fn new(entries: Vec<TrackEntry>) -> Result<Self, SimError> {
        let bad = |what: String| Err(SimError::InvalidConfig(what));
        if entries.is_empty() {
            return bad("track map is empty".into());
        }
        for w in entries.windows(2) {
            // also rejects NaN
            #[allow(clippy::neg_cmp_op_on_partial_ord)]
            if !(w[0].loc < w[1].loc) {
                return bad(format!("balise locations not strictly increasing at {}", w[1].loc));
            }
        }
        for (i, e) in entries.iter().enumerate() {
            BaliseId::new(e.id).map_err(|err| SimError::InvalidConfig(err.to_string()))?;
            if entries[..i].iter().any(|o| o.id == e.id) {
                return bad(format!("duplicate balise id {}", e.id));
            }
            let last = i + 1 == entries.len();
            match e.kind {
                BaliseKind::Controlled if !(last && e.loc == 0.0) => {
                    return bad("the stop marker must be the last balise, at 0".into())
                }
                BaliseKind::Fixed if last => return bad("track map lacks a stop marker".into()),
                BaliseKind::Fixed if e.loc >= 0.0 => {
                    return bad(format!("fixed balise {} at or past the stop point", e.id))
                }
                _ => {}
            }
        }
        Ok(Self { entries })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, SimError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| SimError::InvalidConfig(format!("{}: {e}", path.display())))?;
        let entries: Vec<TrackEntry> = serde_json::from_str(&text)
            .map_err(|e| SimError::InvalidConfig(format!("{}: {e}", path.display())))?;
        Self::new(entries)
    }

    pub fn entries(&self) -> &[TrackEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn fixed_locations(&self) -> Vec<f64> {
        self.entries
            .iter()
            .filter(|e| e.kind == BaliseKind::Fixed)
            .map(|e| e.loc)
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AuthMode {
    /// Scrambling key derived from `sb` by the public legacy rule.
    #[default]
    Legacy,
    /// `sb` is a MAC tag and the scrambling key a keyed PRF of it.
    Authenticated,
}

/// Attacker action. Balise indices are 1-based positions in the track map.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Attack {
    /// Rewrites the reported location, keeping the original `sb`.
    Tamper { balise: usize, new_loc: f64 },
    /// Copies the telegram of `src` into `dst`.
    Clone { src: usize, dst: usize },
    /// Silences a balise.
    Unavailable { balise: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttackState {
    None,
    Tampered,
    Cloned,
    Unavailable,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Balise {
    pub id: BaliseId,
    pub loc: f64,
    pub kind: BaliseKind,
    pub user: UserData,
    pub telegram: Telegram,
    pub attack: AttackState,
}

fn location_mm(loc: f64) -> Result<i32, SimError> {
    let mm = (loc * 1000.0).round();
    if !(mm >= i32::MIN as f64 && mm <= i32::MAX as f64) {
        return Err(SimError::InvalidConfig(format!("location {loc} m out of range")));
    }
    Ok(mm as i32)
}

/// Programmed balises for a track map, possibly modified by attacks.
#[derive(Debug, Clone)]
pub struct Deployment {
    pub balises: Vec<Balise>,
    pub format: TelegramFormat,
    pub mode: AuthMode,
    keystore: Keystore,
}

impl Deployment {
    /// Encodes one telegram per balise. `rng` picks the legacy scrambling bits.
    pub fn program<R: Rng>(
        codec: &Codec,
        track: &TrackMap,
        format: TelegramFormat,
        mode: AuthMode,
        keystore: Keystore,
        rng: &mut R,
    ) -> Result<Self, SimError> {
        let mut balises = Vec::with_capacity(track.len());
        for e in track.entries() {
            let id = BaliseId::new(e.id).map_err(|err| SimError::InvalidConfig(err.to_string()))?;
            let user = UserData::from_fields(format, id, location_mm(e.loc)?);
            let telegram = match mode {
                AuthMode::Legacy => {
                    let sb = ScramblingBits::truncate(rng.gen());
                    codec.encode(&user, sb, derive_scrambling_key_legacy(sb))?
                }
                AuthMode::Authenticated => {
                    encode_authenticated(codec, &user, &keystore.keys_for(id))?
                }
            };
            balises.push(Balise {
                id,
                loc: e.loc,
                kind: e.kind,
                user,
                telegram,
                attack: AttackState::None,
            });
        }
        Ok(Self {
            balises,
            format,
            mode,
            keystore,
        })
    }

    fn index(&self, one_based: usize) -> Result<usize, SimError> {
        if one_based == 0 || one_based > self.balises.len() {
            return Err(SimError::InvalidConfig(format!(
                "attack targets balise {one_based}, track has {}",
                self.balises.len()
            )));
        }
        Ok(one_based - 1)
    }

    /// Applies an attack. The attacker knows the telegram format and the
    /// legacy key rule but not the master key: a tampered telegram keeps the
    /// original `sb` and is scrambled with the legacy key for it.
    pub fn apply_attack(&mut self, codec: &Codec, attack: &Attack) -> Result<(), SimError> {
        match *attack {
            Attack::Tamper { balise, new_loc } => {
                let i = self.index(balise)?;
                let b = &mut self.balises[i];
                let user = b.user.with_location_mm(location_mm(new_loc)?);
                let sb = b.telegram.scrambling_bits();
                b.telegram = codec.encode(&user, sb, derive_scrambling_key_legacy(sb))?;
                b.user = user;
                b.attack = AttackState::Tampered;
            }
            Attack::Clone { src, dst } => {
                let (s, d) = (self.index(src)?, self.index(dst)?);
                let (telegram, user) = (self.balises[s].telegram.clone(), self.balises[s].user.clone());
                let b = &mut self.balises[d];
                b.telegram = telegram;
                b.user = user;
                b.attack = AttackState::Cloned;
            }
            Attack::Unavailable { balise } => {
                let i = self.index(balise)?;
                self.balises[i].attack = AttackState::Unavailable;
            }
        }
        Ok(())
    }

    /// On-board reader bound to this deployment's keys and mode.
    pub fn reader<'a>(&self, codec: &'a Codec) -> Reader<'a> {
        let keys = match self.mode {
            AuthMode::Legacy => Vec::new(),
            AuthMode::Authenticated => self
                .balises
                .iter()
                .map(|b| self.keystore.keys_for(b.id))
                .collect(),
        };
        Reader {
            codec,
            format: self.format,
            mode: self.mode,
            keys,
        }
    }
}

/// Result of reading one balise passage.
#[derive(Debug, Clone, PartialEq)]
pub enum Reading {
    /// Telegram decoded and, in authenticated mode, verified.
    Accepted(UserData),
    /// Decoded but no track-map key verifies it.
    AuthFailed,
    /// Nothing decodable received.
    Silent,
}

pub struct Reader<'a> {
    codec: &'a Codec,
    format: TelegramFormat,
    mode: AuthMode,
    keys: Vec<BaliseKeyPair>,
}

impl Reader<'_> {
    /// Receives `copies` repetitions of `balise`'s telegram starting at bit
    /// `offset`. `expected` is the track-map index the train believes it is
    /// over; its key is tried first, then every other track-map key.
    pub fn read(&self, balise: &Balise, expected: usize, offset: usize, copies: usize) -> Reading {
        if balise.attack == AttackState::Unavailable {
            return Reading::Silent;
        }
        let stream = balise.telegram.transmission(offset, copies);
        let Ok(aligned) = self.codec.align(&stream, self.format) else {
            return Reading::Silent;
        };
        match self.mode {
            AuthMode::Legacy => Reading::Accepted(
                aligned.descramble(derive_scrambling_key_legacy(aligned.scrambling_bits())),
            ),
            AuthMode::Authenticated => {
                let order = std::iter::once(expected)
                    .chain((0..self.keys.len()).filter(move |&k| k != expected))
                    .filter(|&k| k < self.keys.len());
                for k in order {
                    if let Ok(user) = verify_aligned(&aligned, &self.keys[k]) {
                        return Reading::Accepted(user);
                    }
                }
                Reading::AuthFailed
            }
        }
    }
}
