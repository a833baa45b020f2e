//! Infinite bit sources standing in for oracles and random sequences.

use std::fmt;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::bits::BitString;

/// A computable infinite binary sequence.
pub trait BitSource: Send + Sync + fmt::Debug {
    fn bit(&self, i: u64) -> bool;

    fn prefix(&self, n: u64) -> BitString {
        BitString::from_bools((0..n).map(|i| self.bit(i)))
    }
}

/// Seeded counter-mode pseudorandom bits; bit `i` is bit `31 - i % 32` of
/// the `i / 32`-th output word of ChaCha8 on the given stream.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PrngBits {
    seed: u64,
    stream: u64,
}

impl PrngBits {
    pub fn new(seed: u64) -> Self {
        Self { seed, stream: 0 }
    }

    pub fn with_stream(seed: u64, stream: u64) -> Self {
        Self { seed, stream }
    }

    fn rng_at(&self, word: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng.set_word_pos(word as u128);
        rng
    }

    /// Bits `start .. start + len`.
    pub fn range(&self, start: u64, len: u64) -> BitString {
        let mut out = BitString::with_capacity(len as usize);
        if len == 0 {
            return out;
        }
        let mut rng = self.rng_at(start / 32);
        let mut word = rng.next_u32();
        let mut pos = (start % 32) as u32;
        for _ in 0..len {
            if pos == 32 {
                word = rng.next_u32();
                pos = 0;
            }
            out.push(word >> (31 - pos) & 1 == 1);
            pos += 1;
        }
        out
    }
}

impl BitSource for PrngBits {
    fn bit(&self, i: u64) -> bool {
        self.rng_at(i / 32).next_u32() >> (31 - i % 32) & 1 == 1
    }

    fn prefix(&self, n: u64) -> BitString {
        self.range(0, n)
    }
}

/// `w w w …`, or all zeros for the empty word.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Periodic(pub BitString);

impl BitSource for Periodic {
    fn bit(&self, i: u64) -> bool {
        !self.0.is_empty() && self.0.get((i % self.0.len() as u64) as usize)
    }
}
