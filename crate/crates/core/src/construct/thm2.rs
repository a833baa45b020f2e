//! Block coding: the blocks `T^j_k` of the target sequence are coded one
//! after another into `a_i·r`, and the last bit of each stage alternates
//! between the oracle `A` and the angle expansion `φ`.

use serde::{Deserialize, Serialize};

use super::conditions::{Condition, Requirement};
use super::schedule::Schedule;
use super::sources::BitSource;
use super::target::TargetSequence;
use super::thm1::{check_budget, requirement_at};
use crate::bits::BitString;
use crate::error::{Error, Result};
use crate::extension::BlockCoder;

/// One coded block `T^j_k`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockTrace {
    pub j: u64,
    /// `ℓ(x^{j−1}_k) = ν(k) + (j − 1)μ(k)`.
    pub start: u64,
    pub tau_prime_len: u64,
    /// `ℓ(τ′) + μ(k) − 5`.
    pub tau_len: u64,
    pub rho_len: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum FoldSource {
    A,
    Phi,
}

/// `A(k/2)` for even `k`, `φ((k − 1)/2)` for odd `k`.
pub fn fold_for(k: u64) -> (FoldSource, u64) {
    if k.is_multiple_of(2) {
        (FoldSource::A, k / 2)
    } else {
        (FoldSource::Phi, (k - 1) / 2)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Thm2StageTrace {
    pub stage: u64,
    pub k: u64,
    pub requirement: usize,
    pub pair: (u64, u64),
    pub skipped: bool,
    /// Whether the stage codes the blocks `T^1_k … T^ξ(k)_k`.
    pub coded: bool,
    pub blocks: Vec<BlockTrace>,
    pub x_len: u64,
    pub folded_bit: bool,
    pub fold: FoldSource,
    pub fold_index: u64,
}

#[derive(Clone, Debug)]
pub struct Thm2Build {
    pub schedule: Schedule,
    pub stages: u64,
    pub x: BitString,
    pub traces: Vec<Thm2StageTrace>,
}

/// Runs stages `1..=stages`. Stages before the schedule's start stage and
/// stages attending a zero multiplier code nothing, but the target blocks
/// assigned to them are still consumed.
pub fn build_thm2(
    oracle: &dyn BitSource,
    phi: &dyn BitSource,
    conditions: &[Condition],
    target: &TargetSequence,
    sched: Schedule,
    stages: u64,
    bit_budget: u64,
) -> Result<Thm2Build> {
    if !sched.has_blocks() {
        return Err(Error::Invalid(format!("{sched} has no block map")));
    }
    if conditions.is_empty() {
        return Err(Error::Invalid("at least one condition is required".into()));
    }
    check_budget(&sched, stages, bit_budget)?;
    let start = sched.start_stage();
    let mut x = BitString::new();
    let mut traces = Vec::with_capacity(stages as usize);
    for k in 0..stages {
        let next = sched.nu(k + 1)?;
        let (req, pair) = requirement_at(k + 1, conditions.len());
        let (fold, fold_index) = fold_for(k);
        let d = match fold {
            FoldSource::A => oracle.bit(fold_index),
            FoldSource::Phi => phi.bit(fold_index),
        };
        let mut blocks = Vec::new();
        let attend = match &conditions[req].requirement {
            Requirement::Attend(a) if k >= start => Some(a),
            _ => None,
        };
        if let Some(a) = attend {
            let nu = sched.nu(k)?;
            let mu = sched.mu(k)?;
            let mut coder = BlockCoder::new(a);
            for j in 1..=sched.xi(k)? {
                let payload = target.block(&sched, k, j)?;
                let budget = nu + j * mu;
                let start = x.len() as u64;
                let step = coder.extend(&mut x, &payload)?;
                let rho_len = step.rho_len;
                if rho_len > budget {
                    return Err(Error::BlockOverflow { stage: k + 1, block: j, rho_len, budget });
                }
                blocks.push(BlockTrace {
                    j,
                    start,
                    tau_prime_len: step.tau_prime_len,
                    tau_len: step.tau_len,
                    rho_len,
                });
                x.push_zeros((budget - rho_len) as usize);
            }
        }
        x.push_zeros((next - 1) as usize - x.len());
        x.push(d);
        debug_assert_eq!(x.len() as u64, next);
        traces.push(Thm2StageTrace {
            stage: k + 1,
            k,
            requirement: req,
            pair,
            skipped: k >= start && attend.is_none(),
            coded: attend.is_some(),
            blocks,
            x_len: next,
            folded_bit: d,
            fold,
            fold_index,
        });
    }
    Ok(Thm2Build { schedule: sched, stages, x, traces })
}

/// The bits of `A` and `φ` folded into the last positions of the stages.
pub fn recover_parity(x: &BitString, sched: &Schedule, stages: u64) -> Result<(BitString, BitString)> {
    let mut a = BitString::new();
    let mut phi = BitString::new();
    for k in 0..stages {
        let pos = sched.nu(k + 1)? - 1;
        if pos >= x.len() as u64 {
            return Err(Error::LengthMismatch { expected: pos as usize + 1, found: x.len() });
        }
        match fold_for(k).0 {
            FoldSource::A => a.push(x.get(pos as usize)),
            FoldSource::Phi => phi.push(x.get(pos as usize)),
        }
    }
    Ok((a, phi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::construct::sources::PrngBits;
    use crate::construct::target::Ratio;

    fn run(eps: &str, conds: &[&str], stages: u64) -> (Thm2Build, PrngBits, PrngBits) {
        let a = PrngBits::new(11);
        let phi = PrngBits::with_stream(5, 1);
        let t = TargetSequence::new(eps.parse::<Ratio>().unwrap(), 5);
        let c = Condition::parse_all(conds).unwrap();
        (build_thm2(&a, &phi, &c, &t, Schedule::scaled(8).unwrap(), stages, 1 << 24).unwrap(), a, phi)
    }

    #[test]
    fn lengths_and_blocks() {
        let (b, _, _) = run("1/2", &["1/2"], 3);
        let s = b.schedule;
        assert_eq!(b.x.len() as u64, s.nu(3).unwrap());
        assert!(!b.traces[0].coded);
        for t in &b.traces[1..] {
            assert!(t.coded);
            assert_eq!(t.blocks.len() as u64, s.xi(t.k).unwrap());
            for blk in &t.blocks {
                assert_eq!(blk.start, s.nu(t.k).unwrap() + (blk.j - 1) * s.mu(t.k).unwrap());
                assert!(blk.rho_len < blk.start + s.mu(t.k).unwrap());
            }
        }
    }

    #[test]
    fn parity_folding() {
        let (b, a, phi) = run("1/4", &["3/7"], 4);
        let (ra, rp) = recover_parity(&b.x, &b.schedule, 4).unwrap();
        assert_eq!(ra, a.prefix(2));
        assert_eq!(rp, phi.prefix(2));
    }

    #[test]
    fn empty_and_skipped() {
        let (b, _, _) = run("1/2", &["1/2"], 0);
        assert!(b.x.is_empty());
        let (b, _, _) = run("1/2", &["0"], 3);
        assert!(b.traces.iter().all(|t| !t.coded));
        assert!(b.traces[1].skipped && !b.traces[0].skipped);
    }

    #[test]
    fn rejects_thm1_schedule() {
        let c = Condition::parse_all(&["1/2"]).unwrap();
        let t = TargetSequence::new(Ratio::new(1, 2).unwrap(), 1);
        let r = build_thm2(&PrngBits::new(1), &PrngBits::new(1), &c, &t, Schedule::Thm1Paper, 2, 1 << 20);
        assert!(r.is_err());
    }
}
