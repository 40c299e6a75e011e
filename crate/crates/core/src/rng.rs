//! Counter-based random streams.
//!
//! A stream is identified by a 64-bit key; its `i`-th output is a pure
//! function of `(key, i)`. Keys are derived by hashing, so a particle's stream
//! depends only on the master seed, the replica index and the particle's
//! genealogy, never on the order in which particles are processed.

use rand::RngCore;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Key of the `index`-th substream below `parent`.
#[inline]
pub fn split_key(parent: u64, index: u64) -> u64 {
    mix64(mix64(parent ^ 0xD6E8_FEB8_6659_FD93) ^ index.wrapping_add(1).wrapping_mul(GOLDEN))
}

/// Seed of replica `replica` under `master_seed`. Feeding it to a simulation
/// reproduces that replica exactly.
pub fn replica_seed(master_seed: u64, replica: u64) -> u64 {
    split_key(mix64(master_seed.wrapping_add(GOLDEN)), replica)
}

/// A counter-based generator: output `i` is `mix64(key + (i+1)·γ)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CounterRng {
    key: u64,
    counter: u64,
}

impl CounterRng {
    pub fn new(key: u64) -> Self {
        Self { key, counter: 0 }
    }

    pub fn from_parts(key: u64, counter: u64) -> Self {
        Self { key, counter }
    }

    pub fn key(&self) -> u64 {
        self.key
    }

    pub fn counter(&self) -> u64 {
        self.counter
    }

    /// Independent child stream; does not advance `self`.
    pub fn child(&self, index: u64) -> Self {
        Self::new(split_key(self.key, index))
    }

    /// Uniform in the open interval (0, 1).
    #[inline]
    pub fn open01(&mut self) -> f64 {
        ((self.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }
}

impl RngCore for CounterRng {
    #[inline]
    fn next_u32(&mut self) -> u32 {
        (self.next_u64() >> 32) as u32
    }

    #[inline]
    fn next_u64(&mut self) -> u64 {
        self.counter = self.counter.wrapping_add(1);
        mix64(self.key.wrapping_add(self.counter.wrapping_mul(GOLDEN)))
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        for chunk in dest.chunks_mut(8) {
            let v = self.next_u64().to_le_bytes();
            chunk.copy_from_slice(&v[..chunk.len()]);
        }
    }
}
