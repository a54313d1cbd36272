//! Railway spot transmission with integrity protection.
//!
//! The crate is split in three layers:
//!
//! - [`telegram`]: bit-exact encoding of user data into Eurobalise-style
//!   telegrams (scrambling, 10→11 bit substitution, cyclic check bits) and
//!   sliding-window decoding of a cyclically transmitted bitstream.
//! - [`auth`]: per-balise key derivation and a 12-bit authentication tag that
//!   is carried in the scrambling-bits field, so authenticated telegrams are
//!   the same length as legacy ones.
//! - [`sim`]: a discrete-time train automatic stop control simulator with a
//!   learning braking controller, attack injection, and a resilient hybrid
//!   controller that falls back to a conservative dual-PID approach.

pub mod auth;
pub mod bits;
pub mod sim;
pub mod telegram;

pub use bits::BitString;
