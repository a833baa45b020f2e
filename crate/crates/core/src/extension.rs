//! The interval extension step and the padding arithmetic around it.

use serde::Serialize;

use crate::bits::BitString;
use crate::dyadic::{certify_inside, image_cell, interval_of, DyadicInterval, Multiplier};
use crate::error::{Error, Result};

mod exact;

use exact::{PrefixMod, SmallRatio};

/// Bits lost per coded block: the payload capacity of a gap of `g` bits is `g - 5`.
pub const OVERHEAD: u64 = 5;

/// `ρ ≻ σ` and `τ = τ′·b` with `a[ρ̃] ⊂ [τ̃]`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ExtensionResult {
    pub rho: BitString,
    pub tau: BitString,
    pub tau_prime: BitString,
    /// Largest closed dyadic interval in `a[σ̃]`.
    #[serde(rename = "I")]
    pub i: DyadicInterval,
    /// Largest closed dyadic interval in `a⁻¹[τ̃]`.
    #[serde(rename = "J")]
    pub j: DyadicInterval,
}

/// Extends `σ` to `ρ` so that the image under `a` of every real extending
/// `ρ` begins with `τ′·b`.
///
/// The containment `a[ρ̃] ⊂ [τ̃]` is certified at both endpoints of `J`
/// before returning.
pub fn extend_with_block(sigma: &BitString, a: &Multiplier, b: &BitString) -> Result<ExtensionResult> {
    if b.is_empty() {
        return Err(Error::Invalid("payload block must be nonempty".into()));
    }
    let i_cell = image_cell(a, &interval_of(sigma), false)?;
    let tau_prime = i_cell.left_string()?;
    let tau = tau_prime.concat(b);
    let target = interval_of(&tau);
    let j_cell = image_cell(a, &target, true)?;
    let rho = j_cell.left_string()?;
    if !sigma.is_proper_prefix_of(&rho) {
        return Err(Error::Invalid(format!(
            "extension of a {}-bit prefix does not extend it ({} bits)",
            sigma.len(),
            rho.len()
        )));
    }
    let start = tau.len() as u64 + 8;
    for end in [j_cell.left(), j_cell.right()] {
        if !certify_inside(a.value(), &end, &target, start)?.inside {
            return Err(Error::Invalid(format!("a·{end} escapes the coding interval of τ")));
        }
    }
    Ok(ExtensionResult { rho, tau, tau_prime, i: i_cell.to_interval(), j: j_cell.to_interval() })
}

/// Lengths produced by one extension step.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct BlockStep {
    pub tau_prime_len: u64,
    pub tau_len: u64,
    pub rho_len: u64,
}

/// Prefixes at least this long take the windowed path for rational multipliers.
const WINDOWED_MIN: usize = 2048;

/// Repeated extension steps against one multiplier on a growing prefix.
///
/// For a rational `a = p/q` with `pq < 2^63` and a long prefix the step is
/// computed from residues of the prefix instead of the whole numeral, so the
/// cost is linear in the block rather than in the prefix. The result is the
/// one [`extend_with_block`] gives.
pub struct BlockCoder<'a> {
    a: &'a Multiplier,
    fast: Option<(SmallRatio, PrefixMod)>,
}

impl<'a> BlockCoder<'a> {
    pub fn new(a: &'a Multiplier) -> Self {
        let fast = a.as_rational().and_then(SmallRatio::of).map(|r| (r, PrefixMod::new(r.modulus())));
        Self { a, fast }
    }

    /// Replaces `x = σ` by `ρ`. Between calls `x` may only grow at the end.
    pub fn extend(&mut self, x: &mut BitString, b: &BitString) -> Result<BlockStep> {
        if let Some((r, pm)) = &mut self.fast {
            if x.len() >= WINDOWED_MIN {
                let s = exact::extend_windowed(x, pm, *r, b)?;
                return Ok(BlockStep { tau_prime_len: s.tau_prime_len, tau_len: s.tau_len, rho_len: s.rho_len });
            }
        }
        let ext = extend_with_block(x, self.a, b)?;
        let step = BlockStep {
            tau_prime_len: ext.tau_prime.len() as u64,
            tau_len: ext.tau.len() as u64,
            rho_len: ext.rho.len() as u64,
        };
        *x = ext.rho;
        Ok(step)
    }
}

/// Length of `τ′`, the left string of the largest cell in `a[σ̃]`, for every
/// prefix `σ = x↾n`, `n ∈ ends` (increasing).
pub fn forward_lengths(a: &Multiplier, x: &BitString, ends: &[u64]) -> Result<Vec<u64>> {
    if let Some(r) = a.as_rational().and_then(SmallRatio::of) {
        let mut pm = PrefixMod::new(r.q);
        return Ok(ends.iter().map(|&n| n + exact::forward_exponent(r, pm.at(x, n as usize))).collect());
    }
    ends.iter()
        .map(|&n| Ok(image_cell(a, &interval_of(&x.prefix(n as usize)), false)?.k))
        .collect()
}

/// `12·k·ν(k) + 1`, the zero-run length that makes `τ′0^s` compressible at stage `k + 1`.
pub fn zeros_schedule(k: u64, nu_k: u64) -> Result<u64> {
    12u64
        .checked_mul(k)
        .and_then(|v| v.checked_mul(nu_k))
        .and_then(|v| v.checked_add(1))
        .ok_or_else(|| Error::ScheduleOverflow(format!("12·{k}·{nu_k} + 1 overflows")))
}

/// `ℓ + 2⌈log₂(ℓ + 1)⌉`, a computable upper-bound shape for `K(σ)` with `ℓ = ℓ(σ)`.
pub fn surrogate_complexity(len: u64) -> u64 {
    len + 2 * ceil_log2(len + 1)
}

/// Payload bits codable when extending a prefix of length `m` to length `n`.
pub fn block_capacity(m: u64, n: u64) -> Result<u64> {
    match n.checked_sub(m + OVERHEAD) {
        Some(c) if c > 0 => Ok(c),
        _ => Err(Error::NoRoom { prefix: m, target: n }),
    }
}

/// `⌈log₂ n⌉` for `n ≥ 1`.
pub fn ceil_log2(n: u64) -> u64 {
    if n <= 1 {
        0
    } else {
        64 - (n - 1).leading_zeros() as u64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dyadic::{Dyadic, Real};
    use crate::dyadic::largest_closed_dyadic_in;

    fn bs(s: &str) -> BitString {
        s.parse().unwrap()
    }

    fn half() -> Multiplier {
        Multiplier::new(Real::rational(1, 2)).unwrap()
    }

    #[test]
    fn worked_example() {
        let r = extend_with_block(&bs("1"), &half(), &bs("00")).unwrap();
        assert_eq!(r.rho.to_string(), "1010001");
        assert_eq!(r.tau.to_string(), "010100");
        assert_eq!(r.tau_prime.to_string(), "0101");
        let t = interval_of(&r.tau);
        assert_eq!((t.lo(), t.hi()), (&Dyadic::new(5, 4), &Dyadic::new(21, 6)));
        assert_eq!(r.rho.len(), 1 + 2 + 4);
    }

    #[test]
    fn empty_prefix() {
        let r = extend_with_block(&BitString::new(), &half(), &bs("0")).unwrap();
        assert!(r.rho.len() <= 5);
        assert!(!r.rho.is_empty());
    }

    /// Independent oracle: scan every cell j/2^k by increasing k.
    fn brute_cell(lo: &Dyadic, hi: &Dyadic) -> (i64, u64) {
        for k in 0..20u64 {
            for j in 0..(1i64 << k) {
                let l = Dyadic::new(j, k);
                let r = Dyadic::new(j + 1, k);
                if lo < &l && &r < hi {
                    return (j, k);
                }
            }
        }
        panic!("no cell")
    }

    #[test]
    fn matches_brute_force_for_exact_half() {
        for s in ["", "0", "1", "01", "110", "1011", "0000001"] {
            let sigma = bs(s);
            let r = extend_with_block(&sigma, &half(), &bs("1")).unwrap();
            let iv = interval_of(&sigma);
            let (j, k) = brute_cell(&iv.lo().mul_pow2(-1), &iv.hi().mul_pow2(-1));
            assert_eq!(r.i, DyadicInterval::closed(Dyadic::new(j, k), Dyadic::new(j + 1, k)).unwrap());
            let t = interval_of(&r.tau);
            let (j, k) = brute_cell(&t.lo().mul_pow2(1), &t.hi().mul_pow2(1));
            assert_eq!(r.j, DyadicInterval::closed(Dyadic::new(j, k), Dyadic::new(j + 1, k)).unwrap());
            assert_eq!(r.j, largest_closed_dyadic_in(&DyadicInterval::open(t.lo().mul_pow2(1), t.hi().mul_pow2(1)).unwrap()).unwrap());
        }
    }

    fn random_bits(seed: u64, stream: u64, n: u64) -> BitString {
        crate::construct::PrngBits::with_stream(seed, stream).range(0, n)
    }

    #[test]
    fn windowed_matches_generic() {
        let ratios = [(1, 2), (3, 4), (1, 3), (5, 7), (1, 1000), (1, 1), (999, 1000), (3, 1024), (12345, 67891)];
        for (i, &(p, q)) in ratios.iter().enumerate() {
            let a = Multiplier::new(Real::rational(p, q)).unwrap();
            let r = SmallRatio::of(a.as_rational().unwrap()).unwrap();
            for t in 0..12u64 {
                let seed = i as u64 * 100 + t;
                let sigma = random_bits(seed, 0, 200 + 311 * t);
                let b = random_bits(seed, 1, 1 + 37 * t);
                let want = extend_with_block(&sigma, &a, &b).unwrap();
                let mut x = sigma.clone();
                let mut pm = PrefixMod::new(r.modulus());
                let got = exact::extend_windowed(&mut x, &mut pm, r, &b).unwrap();
                assert_eq!(x, want.rho, "{p}/{q} t={t}");
                assert_eq!(got.tau_prime_len, want.tau_prime.len() as u64);
                assert_eq!(got.tau_len, want.tau.len() as u64);
                let ks = forward_lengths(&a, &sigma, &[sigma.len() as u64]).unwrap();
                assert_eq!(ks[0], want.tau_prime.len() as u64);
            }
        }
    }

    #[test]
    fn coder_chain_matches_generic() {
        let a = Multiplier::new(Real::rational(2, 3)).unwrap();
        let mut coder = BlockCoder::new(&a);
        let mut x = random_bits(9, 0, 2100);
        let mut y = x.clone();
        for j in 0..20 {
            let b = random_bits(9, j + 1, 50 + j);
            let s = coder.extend(&mut x, &b).unwrap();
            y = extend_with_block(&y, &a, &b).unwrap().rho;
            assert_eq!(x, y);
            assert_eq!(s.rho_len, x.len() as u64);
            x.push_zeros(3);
            y.push_zeros(3);
        }
        let stream = Multiplier::new(Real::rational_stream(num_rational::BigRational::new(2.into(), 3.into()))).unwrap();
        let ends = [100u64, 777, 2000];
        assert_eq!(forward_lengths(&a, &x, &ends).unwrap(), forward_lengths(&stream, &x, &ends).unwrap());
    }

    #[test]
    fn empty_block_rejected() {
        assert!(extend_with_block(&bs("1"), &half(), &BitString::new()).is_err());
    }

    #[test]
    fn schedules_and_capacity() {
        assert_eq!(zeros_schedule(3, 256).unwrap(), 9217);
        assert_eq!(zeros_schedule(1, 4).unwrap(), 49);
        assert!(zeros_schedule(3, 256).unwrap() < 65536 - 256 - 4);
        assert_eq!(surrogate_complexity(8), 16);
        assert_eq!(surrogate_complexity(1), 3);
        assert_eq!(surrogate_complexity(255), 271);
        assert_eq!(block_capacity(0, 32).unwrap(), 27);
        assert_eq!(block_capacity(10, 16).unwrap(), 1);
        assert_eq!(block_capacity(10, 15), Err(Error::NoRoom { prefix: 10, target: 15 }));
    }

    #[test]
    fn ceil_log2_values() {
        assert_eq!(ceil_log2(1), 0);
        assert_eq!(ceil_log2(2), 1);
        assert_eq!(ceil_log2(3), 2);
        assert_eq!(ceil_log2(1024), 10);
        assert_eq!(ceil_log2(1025), 11);
    }
}
