//! Keyed random streams.
//!
//! Every stochastic step draws from its own ChaCha stream whose seed is a
//! SHA-256 digest of a structured key, so results never depend on the order
//! in which work is scheduled.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

/// One component of a stream key.
#[derive(Debug, Clone, Copy)]
pub enum KeyPart<'a> {
    U64(u64),
    F64(f64),
    Str(&'a str),
}

impl<'a> From<u64> for KeyPart<'a> {
    fn from(v: u64) -> Self {
        KeyPart::U64(v)
    }
}

impl<'a> From<usize> for KeyPart<'a> {
    fn from(v: usize) -> Self {
        KeyPart::U64(v as u64)
    }
}

impl<'a> From<f64> for KeyPart<'a> {
    fn from(v: f64) -> Self {
        KeyPart::F64(v)
    }
}

impl<'a> From<&'a str> for KeyPart<'a> {
    fn from(v: &'a str) -> Self {
        KeyPart::Str(v)
    }
}

impl<'a> From<&'a String> for KeyPart<'a> {
    fn from(v: &'a String) -> Self {
        KeyPart::Str(v.as_str())
    }
}

fn digest(parts: &[KeyPart<'_>]) -> [u8; 32] {
    let mut h = Sha256::new();
    for part in parts {
        // tag + length prefix keeps distinct keys from colliding after concatenation
        match part {
            KeyPart::U64(v) => {
                h.update([0u8]);
                h.update(v.to_le_bytes());
            }
            KeyPart::F64(v) => {
                h.update([1u8]);
                h.update(v.to_bits().to_le_bytes());
            }
            KeyPart::Str(s) => {
                h.update([2u8]);
                h.update((s.len() as u64).to_le_bytes());
                h.update(s.as_bytes());
            }
        }
    }
    let mut out = [0u8; 32];
    out.copy_from_slice(&h.finalize());
    out
}

/// Builds the stream for a key.
pub fn stream(parts: &[KeyPart<'_>]) -> ChaCha8Rng {
    ChaCha8Rng::from_seed(digest(parts))
}

/// Derives a 64-bit child seed from a key.
pub fn derive_seed(parts: &[KeyPart<'_>]) -> u64 {
    let d = digest(parts);
    u64::from_le_bytes(d[..8].try_into().unwrap())
}

#[macro_export]
macro_rules! key {
    ($($part:expr),* $(,)?) => {
        &[$($crate::rng::KeyPart::from($part)),*]
    };
}
