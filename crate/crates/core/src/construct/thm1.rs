//! Zero coding: `r` such that `a_i·r` has long zero runs at the stages
//! attending `a_i`, with the oracle `A` folded in at positions `ν(k+1) − 1`.

use serde::{Deserialize, Serialize};

use super::conditions::{Condition, Requirement};
use super::schedule::Schedule;
use super::sources::BitSource;
use crate::bits::{unpair, BitString};
use crate::error::{Error, Result};
use crate::extension::{block_capacity, extend_with_block, zeros_schedule};

/// Bookkeeping for the stage that turns `x_k` into `x_{k+1}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageTrace {
    /// `k + 1`.
    pub stage: u64,
    pub k: u64,
    /// Index of the attended condition.
    pub requirement: usize,
    /// `unpair(k + 1)`.
    pub pair: (u64, u64),
    /// Length of the zero block `0^s`.
    pub s: u64,
    pub skipped: bool,
    pub truncated: bool,
    pub rho_len: u64,
    pub tau_prime: BitString,
    /// `ℓ(x_{k+1})`.
    pub x_len: u64,
    pub folded_bit: bool,
}

impl StageTrace {
    /// `τ_k = τ′_k 0^s`.
    pub fn tau(&self) -> BitString {
        let mut t = self.tau_prime.clone();
        t.push_zeros(self.s as usize);
        t
    }

    pub fn tau_len(&self) -> u64 {
        self.tau_prime.len() as u64 + self.s
    }

    /// Whether the stage carries a containment claim about `a_i · r`.
    pub fn is_coded(&self) -> bool {
        !self.skipped && !self.truncated
    }
}

#[derive(Clone, Debug)]
pub struct Thm1Build {
    pub schedule: Schedule,
    pub stages: u64,
    pub x: BitString,
    pub traces: Vec<StageTrace>,
}

/// Fails with [`Error::ScheduleOverflow`] unless `ν(stages)` fits in `bit_budget`.
pub fn check_budget(sched: &Schedule, stages: u64, bit_budget: u64) -> Result<u64> {
    let len = if stages == 0 { 0 } else { sched.nu(stages)? };
    if len > bit_budget {
        return Err(Error::ScheduleOverflow(format!(
            "{sched} needs ν({stages}) = {len} bits, over the budget of {bit_budget}"
        )));
    }
    Ok(len)
}

/// Index of the condition attended at stage `k + 1`, and `unpair(k + 1)`.
pub fn requirement_at(stage: u64, count: usize) -> (usize, (u64, u64)) {
    let (i, n) = unpair(stage as u128);
    ((i % count as u64) as usize, (i, n))
}

/// Runs stages `1..=stages`, producing `x` with `ℓ(x) = ν(stages)`.
pub fn build_thm1(
    oracle: &dyn BitSource,
    conditions: &[Condition],
    sched: Schedule,
    stages: u64,
    bit_budget: u64,
) -> Result<Thm1Build> {
    if conditions.is_empty() {
        return Err(Error::Invalid("at least one condition is required".into()));
    }
    check_budget(&sched, stages, bit_budget)?;
    let mut x = BitString::new();
    let mut traces = Vec::with_capacity(stages as usize);
    for k in 0..stages {
        let next = sched.nu(k + 1)?;
        let (req, pair) = requirement_at(k + 1, conditions.len());
        let s = match sched {
            Schedule::Thm1Paper => zeros_schedule(k, sched.nu(k)?)?,
            _ => block_capacity(x.len() as u64, next)?,
        };
        let d = oracle.bit(k);
        let mut trace = StageTrace {
            stage: k + 1,
            k,
            requirement: req,
            pair,
            s,
            skipped: false,
            truncated: false,
            rho_len: 0,
            tau_prime: BitString::new(),
            x_len: next,
            folded_bit: d,
        };
        match &conditions[req].requirement {
            Requirement::Skip => {
                trace.skipped = true;
                trace.rho_len = x.len() as u64;
                x.push_zeros((next - 1) as usize - x.len());
            }
            Requirement::Attend(a) => {
                let ext = extend_with_block(&x, a, &BitString::zeros(s as usize))?;
                trace.rho_len = ext.rho.len() as u64;
                trace.tau_prime = ext.tau_prime;
                x = ext.rho;
                if x.len() as u64 >= next {
                    trace.truncated = true;
                    x.truncate((next - 1) as usize);
                } else {
                    x.push_zeros((next - 1) as usize - x.len());
                }
            }
        }
        x.push(d);
        debug_assert_eq!(x.len() as u64, next);
        traces.push(trace);
    }
    Ok(Thm1Build { schedule: sched, stages, x, traces })
}

/// `x(ν(1) − 1), …, x(ν(N) − 1)`.
pub fn recover_a(x: &BitString, sched: &Schedule, stages: u64) -> Result<BitString> {
    let mut out = BitString::with_capacity(stages as usize);
    for k in 1..=stages {
        let pos = sched.nu(k)? - 1;
        if pos >= x.len() as u64 {
            return Err(Error::LengthMismatch { expected: pos as usize + 1, found: x.len() });
        }
        out.push(x.get(pos as usize));
    }
    Ok(out)
}
