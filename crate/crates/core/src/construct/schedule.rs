use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::extension::OVERHEAD;

/// Folding map `ν`, block map `μ` and block count `ξ`.
///
/// * `thm1-paper`: `ν(k) = 2^(2^k)`.
/// * `thm2-paper`: `ν(k) = 2^(2^k) + k`, `μ(k) = 2^(2^k - k)`, `ξ(k) = 2^k (2^(2^k) - 1)`.
/// * `scaled:B`: `ν(k) = B^(k+1) + k`, `μ(k) = B^k`, `ξ(k) = B(B - 1)`.
///
/// In the block-coding families `ξ(k)·μ(k) = ν(k+1) - ν(k) - 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Schedule {
    Thm1Paper,
    Thm2Paper,
    Scaled { base: u64 },
}

fn overflow(what: &str, k: u64) -> Error {
    Error::ScheduleOverflow(format!("{what}({k}) does not fit in 64 bits"))
}

fn pow2(e: u64) -> Option<u64> {
    (e < 64).then(|| 1u64 << e)
}

impl Schedule {
    pub fn scaled(base: u64) -> Result<Self> {
        if base < 8 || !base.is_power_of_two() {
            return Err(Error::Invalid(format!("scaled base must be a power of two ≥ 8, got {base}")));
        }
        Ok(Schedule::Scaled { base })
    }

    /// Parses `paper` (resolved against `theorem`), `thm1-paper`,
    /// `thm2-paper` or `scaled:B`.
    pub fn parse_for(spec: &str, theorem: u8) -> Result<Self> {
        match spec.trim() {
            "paper" if theorem == 1 => Ok(Schedule::Thm1Paper),
            "paper" => Ok(Schedule::Thm2Paper),
            other => other.parse(),
        }
    }

    pub fn nu(&self, k: u64) -> Result<u64> {
        match *self {
            Schedule::Thm1Paper => pow2(k).and_then(pow2).ok_or_else(|| overflow("ν", k)),
            Schedule::Thm2Paper => {
                pow2(k).and_then(pow2).and_then(|v| v.checked_add(k)).ok_or_else(|| overflow("ν", k))
            }
            Schedule::Scaled { base } => u32::try_from(k + 1)
                .ok()
                .and_then(|e| base.checked_pow(e))
                .and_then(|v| v.checked_add(k))
                .ok_or_else(|| overflow("ν", k)),
        }
    }

    pub fn mu(&self, k: u64) -> Result<u64> {
        match *self {
            Schedule::Thm1Paper => Err(Error::Invalid("thm1-paper has no block map".into())),
            Schedule::Thm2Paper => pow2(k).and_then(|e| pow2(e - k)).ok_or_else(|| overflow("μ", k)),
            Schedule::Scaled { base } => {
                u32::try_from(k).ok().and_then(|e| base.checked_pow(e)).ok_or_else(|| overflow("μ", k))
            }
        }
    }

    pub fn xi(&self, k: u64) -> Result<u64> {
        match *self {
            Schedule::Thm1Paper => Err(Error::Invalid("thm1-paper has no block count".into())),
            Schedule::Thm2Paper => pow2(k)
                .and_then(pow2)
                .and_then(|b| (b - 1).checked_mul(1u64 << k))
                .ok_or_else(|| overflow("ξ", k)),
            Schedule::Scaled { base } => Ok(base * (base - 1)),
        }
    }

    pub fn has_blocks(&self) -> bool {
        !matches!(self, Schedule::Thm1Paper)
    }

    /// Payload length `μ(k) - 5` of a block at stage `k`.
    pub fn block_len(&self, k: u64) -> Result<u64> {
        let mu = self.mu(k)?;
        mu.checked_sub(OVERHEAD).filter(|&l| l > 0).ok_or(Error::NoRoom { prefix: 0, target: mu })
    }

    /// The least `k` with `μ(k) > 5`; the first stage that codes blocks is `k + 1`.
    pub fn start_stage(&self) -> u64 {
        if !self.has_blocks() {
            return 0;
        }
        (0..).find(|&k| self.mu(k).map(|m| m > OVERHEAD).unwrap_or(true)).unwrap()
    }

    /// The largest `N` for which `ν(N)` is representable.
    pub fn max_stage(&self) -> u64 {
        (0..).take_while(|&k| self.nu(k).is_ok()).last().unwrap_or(0)
    }

    /// Offset in the target sequence of the first payload bit of stage `k`.
    pub fn target_offset(&self, k: u64) -> Result<u64> {
        let mut off = 0u64;
        for k2 in self.start_stage()..k {
            let add = self.xi(k2)?.checked_mul(self.block_len(k2)?).ok_or_else(|| overflow("ℓ(T)", k2))?;
            off = off.checked_add(add).ok_or_else(|| overflow("ℓ(T)", k2))?;
        }
        Ok(off)
    }
}

impl fmt::Display for Schedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Schedule::Thm1Paper => f.write_str("thm1-paper"),
            Schedule::Thm2Paper => f.write_str("thm2-paper"),
            Schedule::Scaled { base } => write!(f, "scaled:{base}"),
        }
    }
}

impl FromStr for Schedule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "thm1-paper" => Ok(Schedule::Thm1Paper),
            "thm2-paper" => Ok(Schedule::Thm2Paper),
            other => {
                let b = other
                    .strip_prefix("scaled:")
                    .and_then(|b| b.parse().ok())
                    .ok_or_else(|| Error::Parse(format!("unknown schedule `{other}`")))?;
                Schedule::scaled(b)
            }
        }
    }
}

impl Serialize for Schedule {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Schedule {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn paper_values() {
        let s = Schedule::Thm1Paper;
        assert_eq!((0..5).map(|k| s.nu(k).unwrap()).collect::<Vec<_>>(), [2, 4, 16, 256, 65536]);
        assert_eq!(s.max_stage(), 5);
        let s = Schedule::Thm2Paper;
        assert_eq!((0..5).map(|k| s.nu(k).unwrap()).collect::<Vec<_>>(), [2, 5, 18, 259, 65540]);
        assert_eq!(s.xi(3).unwrap(), 2040);
        assert_eq!(s.mu(3).unwrap(), 32);
        assert_eq!(s.block_len(3).unwrap(), 27);
        assert_eq!(s.start_stage(), 3);
        assert_eq!(s.nu(4).unwrap() - s.nu(3).unwrap() - 1, 65280);
    }

    #[test]
    fn gap_identity() {
        for s in [Schedule::Thm2Paper, Schedule::scaled(8).unwrap(), Schedule::scaled(16).unwrap()] {
            for k in 0..4 {
                let gap = s.nu(k + 1).unwrap() - s.nu(k).unwrap() - 1;
                assert_eq!(s.xi(k).unwrap() * s.mu(k).unwrap(), gap, "{s} k={k}");
            }
        }
    }

    #[test]
    fn scaled_values() {
        let s = Schedule::scaled(16).unwrap();
        assert_eq!(s.nu(6).unwrap(), (1 << 28) + 6);
        assert_eq!(s.block_len(2).unwrap(), 251);
        assert_eq!(s.xi(2).unwrap(), 240);
        assert_eq!(s.start_stage(), 1);
        assert_eq!(s.target_offset(1).unwrap(), 0);
        assert_eq!(s.target_offset(2).unwrap(), 240 * 11);
        assert!(Schedule::scaled(12).is_err());
        assert!(Schedule::scaled(4).is_err());
    }

    #[test]
    fn text_forms() {
        for s in ["thm1-paper", "thm2-paper", "scaled:16"] {
            assert_eq!(s.parse::<Schedule>().unwrap().to_string(), s);
        }
        assert_eq!(Schedule::parse_for("paper", 1).unwrap(), Schedule::Thm1Paper);
        assert_eq!(Schedule::parse_for("paper", 2).unwrap(), Schedule::Thm2Paper);
        assert!("scaled:x".parse::<Schedule>().is_err());
    }

    #[test]
    fn overflow_reported() {
        assert!(matches!(Schedule::Thm1Paper.nu(6), Err(Error::ScheduleOverflow(_))));
        assert!(Schedule::Thm1Paper.mu(1).is_err());
    }
}
