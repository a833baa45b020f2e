//! Recovering the coded target blocks from `a·r` at the end of a stage.
//!
//! With `ρ = x↾(ν(k+1) − 1)` the left end-point `d` of the largest dyadic
//! interval in `a[ρ̃]` reads `σ σ₁ T¹ σ₂ T² … T^ξ σ′`. Each `τ_j = τ′_j T^j`
//! is a prefix of `d`, so block `j` sits at `d[ℓ(τ′_j) .. ℓ(τ_j)]`.

use serde::Serialize;

use crate::bits::BitString;
use crate::construct::{Schedule, TargetSequence, Thm2StageTrace};
use crate::dyadic::{image_cell, interval_of, Multiplier};
use crate::error::{Error, Result};
use crate::extension::{forward_lengths, OVERHEAD};

/// `|ℓ(τ′_{j+1}) − ℓ(τ_j)|` for consecutive blocks of one stage.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct CostDelta {
    pub stage: u64,
    /// Index `j` of the earlier block of the pair.
    pub block: u64,
    pub delta: u64,
}

pub fn cost_deltas(traces: &[Thm2StageTrace]) -> Vec<CostDelta> {
    traces
        .iter()
        .flat_map(|t| {
            t.blocks.windows(2).map(move |w| CostDelta {
                stage: t.stage,
                block: w[0].j,
                delta: w[1].tau_prime_len.abs_diff(w[0].tau_len),
            })
        })
        .collect()
}

/// `⌈−log₂ a⌉` for `a ∈ (0, 1]`, from a lower bound on `a`.
pub fn neg_log2_ceil(a: &Multiplier) -> Result<u64> {
    if let Some(q) = a.as_rational() {
        // least e with 2^e·p ≥ q
        let (p, d) = (q.numer().magnitude(), q.denom().magnitude());
        let mut e = d.bits().saturating_sub(p.bits());
        while (p << e) < *d {
            e += 1;
        }
        while e > 0 && (p << (e - 1)) >= *d {
            e -= 1;
        }
        return Ok(e);
    }
    // 1/a ≤ 2^inv_bits bounds the answer; refine with an enclosure of a.
    let lo = a.value().enclose(a.inv_bits() + 16)?.lo;
    if !lo.is_positive() {
        return Ok(a.inv_bits());
    }
    Ok((0..=a.inv_bits()).find(|&e| lo.mul_pow2(e as i64) >= crate::dyadic::Dyadic::one()).unwrap_or(a.inv_bits()))
}

/// Positions of the coded blocks inside `d`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct StageLayout {
    pub stage: u64,
    pub tau_prime_lens: Vec<u64>,
    /// `ℓ(d)`.
    pub d_len: u64,
    /// `ℓ(σσ₁) = ℓ(τ′₁)`.
    pub lead: u64,
    /// `ℓ(σ′) = ℓ(d) − ℓ(τ_ξ)`.
    pub trailer: i64,
}

/// The decoded blocks `T^1_k … T^ξ(k)_k` of stage `k + 1`.
#[derive(Clone, Debug)]
pub struct DecodedStage {
    pub bits: BitString,
    pub layout: StageLayout,
}

/// Decodes the blocks of stage `k + 1` from `x`, which must cover the stage.
///
/// Block positions come from `trace` when given. Without a trace they are
/// recomputed: `τ′_j` is the left string of the largest cell in
/// `a[(x↾(ν(k) + (j − 1)μ(k)))~]`, since every block starts from the
/// zero-padded prefix of that length.
pub fn decode_blocks(
    x: &BitString,
    a: &Multiplier,
    sched: &Schedule,
    k: u64,
    trace: Option<&Thm2StageTrace>,
) -> Result<DecodedStage> {
    let end = sched.nu(k + 1)?;
    if (x.len() as u64) < end {
        return Err(Error::LengthMismatch { expected: end as usize, found: x.len() });
    }
    let nu = sched.nu(k)?;
    let mu = sched.mu(k)?;
    let xi = sched.xi(k)?;
    let tau_prime_lens = match trace {
        Some(t) => {
            if t.k != k || t.blocks.len() as u64 != xi {
                return Err(Error::Invalid(format!("trace of stage {} does not code {xi} blocks", t.stage)));
            }
            t.blocks.iter().map(|b| b.tau_prime_len).collect()
        }
        None => {
            let ends: Vec<u64> = (0..xi).map(|j| nu + j * mu).collect();
            forward_lengths(a, x, &ends)?
        }
    };
    let rho = x.prefix((end - 1) as usize);
    let d = image_cell(a, &interval_of(&rho), false)?.left_string()?;
    drop(rho);
    let w = mu - OVERHEAD;
    let mut bits = BitString::with_capacity((xi * w) as usize);
    for &tp in &tau_prime_lens {
        if tp + w > d.len() as u64 {
            return Err(Error::LengthMismatch { expected: (tp + w) as usize, found: d.len() });
        }
        bits.extend(&d.slice(tp as usize, (tp + w) as usize));
    }
    let last = tau_prime_lens.last().map_or(0, |&tp| tp + w);
    let layout = StageLayout {
        stage: k + 1,
        lead: tau_prime_lens.first().copied().unwrap_or(0),
        tau_prime_lens,
        d_len: d.len() as u64,
        trailer: d.len() as i64 - last as i64,
    };
    Ok(DecodedStage { bits, layout })
}

/// Decodes stage `k + 1` and compares against the target blocks.
/// Fails with [`Error::DecodeMismatch`] at the first differing index of `T`.
pub fn verify_decode(
    x: &BitString,
    a: &Multiplier,
    sched: &Schedule,
    k: u64,
    target: &TargetSequence,
    trace: Option<&Thm2StageTrace>,
) -> Result<DecodedStage> {
    let dec = decode_blocks(x, a, sched, k, trace)?;
    let expected = target.stage_payload(sched, k)?;
    let offset = sched.target_offset(k)?;
    if let Some(i) = dec.bits.first_difference(&expected) {
        return Err(Error::DecodeMismatch { index: offset + i as u64 });
    }
    if dec.bits.len() != expected.len() {
        return Err(Error::DecodeMismatch { index: offset + dec.bits.len().min(expected.len()) as u64 });
    }
    Ok(dec)
}

/// `⌈−log₂ a⌉ + ν(k) + 2`.
pub fn lead_bound(a: &Multiplier, sched: &Schedule, k: u64) -> Result<u64> {
    Ok(neg_log2_ceil(a)? + sched.nu(k)? + 2)
}
