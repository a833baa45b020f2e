use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::schedule::Schedule;
use super::sources::PrngBits;
use crate::bits::BitString;
use crate::error::{Error, Result};

/// A rational `p/q ∈ [0, 1]` in lowest terms.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Ratio {
    pub num: u64,
    pub den: u64,
}

impl Ratio {
    pub fn new(num: u64, den: u64) -> Result<Self> {
        if den == 0 || num > den {
            return Err(Error::Invalid(format!("{num}/{den} is not in [0, 1]")));
        }
        let g = num_integer::gcd(num, den);
        Ok(Self { num: num / g, den: den / g })
    }

    /// `⌊self · n⌋`.
    pub fn floor_mul(&self, n: u64) -> u64 {
        (self.num as u128 * n as u128 / self.den as u128) as u64
    }
}

impl fmt::Display for Ratio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

impl FromStr for Ratio {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Parse(format!("invalid ratio `{s}`"));
        match s.trim().split_once('/') {
            Some((p, q)) => Ratio::new(p.trim().parse().map_err(|_| bad())?, q.trim().parse().map_err(|_| bad())?),
            None => Ratio::new(s.trim().parse().map_err(|_| bad())?, 1),
        }
    }
}

impl Serialize for Ratio {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Ratio {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

/// The sparse sequence of density `ε`: position `n` holds the next
/// pseudorandom bit iff `⌊ε(n+1)⌋ > ⌊εn⌋`, and 0 otherwise, so exactly
/// `⌊εn⌋` of the first `n` positions carry random bits.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TargetSequence {
    eps: Ratio,
    random: PrngBits,
}

impl TargetSequence {
    pub fn new(eps: Ratio, seed: u64) -> Self {
        Self { eps, random: PrngBits::new(seed) }
    }

    pub fn eps(&self) -> Ratio {
        self.eps
    }

    pub fn carries_random(&self, n: u64) -> bool {
        self.eps.floor_mul(n + 1) > self.eps.floor_mul(n)
    }

    /// Positions `start .. start + len`.
    pub fn range(&self, start: u64, len: u64) -> BitString {
        let first = self.eps.floor_mul(start);
        let count = self.eps.floor_mul(start + len) - first;
        let random = self.random.range(first, count);
        let mut out = BitString::with_capacity(len as usize);
        let mut used = 0usize;
        for n in start..start + len {
            if self.carries_random(n) {
                out.push(random.get(used));
                used += 1;
            } else {
                out.push(false);
            }
        }
        out
    }

    pub fn prefix(&self, n: u64) -> BitString {
        self.range(0, n)
    }

    /// The payload `T^j_k` of block `j ∈ 1..=ξ(k)` at stage `k`.
    pub fn block(&self, sched: &Schedule, k: u64, j: u64) -> Result<BitString> {
        let len = sched.block_len(k)?;
        let start = sched.target_offset(k)? + (j - 1) * len;
        Ok(self.range(start, len))
    }

    /// `T_k = T^1_k ⋯ T^ξ(k)_k`.
    pub fn stage_payload(&self, sched: &Schedule, k: u64) -> Result<BitString> {
        let len = sched.xi(k)? * sched.block_len(k)?;
        Ok(self.range(sched.target_offset(k)?, len))
    }
}

/// A block `T^j_k` of the partition of `T`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TargetBlock {
    pub k: u64,
    pub j: u64,
    pub offset: u64,
    pub bits: BitString,
}

/// Consecutive blocks `T^j_k` for stages `start_stage ≤ k < upto_stage`.
pub fn partition_t(t: &TargetSequence, sched: &Schedule, upto_stage: u64) -> Result<Vec<TargetBlock>> {
    if !sched.has_blocks() {
        return Err(Error::Invalid(format!("{sched} has no block map")));
    }
    let mut out = Vec::new();
    for k in sched.start_stage()..upto_stage {
        let len = sched.block_len(k)?;
        let base = sched.target_offset(k)?;
        for j in 1..=sched.xi(k)? {
            let offset = base + (j - 1) * len;
            out.push(TargetBlock { k, j, offset, bits: t.range(offset, len) });
        }
    }
    Ok(out)
}

pub fn gen_target(eps: Ratio, seed: u64, n: u64) -> BitString {
    TargetSequence::new(eps, seed).prefix(n)
}
