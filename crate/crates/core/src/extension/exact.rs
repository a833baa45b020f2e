//! The extension step for a rational multiplier `a = p/q` on long prefixes.
//!
//! Every quantity the step needs is a floor quotient whose low bits are
//! determined by residues: `⌊A/D⌋ mod 2^w = ⌊(A mod D·2^w) / D⌋`. The
//! prefix therefore enters only through `⌊X / 2^G⌋ mod pq` and its last `G`
//! digits, and the work per block is linear in the block length.

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};

use crate::bits::BitString;
use crate::error::{Error, Result};

/// Low digits of the prefix carried through the forward step.
const G: u64 = 256;
/// Digits of the prefix re-derived and compared against it.
const OVERLAP: u64 = 32;

/// Running `⌊X / 2^(ℓ − end)⌋ mod c` for a growing string.
#[derive(Clone, Debug)]
pub(crate) struct PrefixMod {
    c: u64,
    pos: usize,
    r: u64,
}

impl PrefixMod {
    pub(crate) fn new(c: u64) -> Self {
        Self { c, pos: 0, r: 0 }
    }

    /// The numeral `x[0..end]` modulo `c`. Assumes the digits before the
    /// last queried position have not changed.
    pub(crate) fn at(&mut self, x: &BitString, end: usize) -> u64 {
        if end < self.pos {
            self.pos = 0;
            self.r = 0;
        }
        self.r = x.mod_extend(self.r, self.pos, end, self.c);
        self.pos = end;
        self.r
    }
}

/// `p/q` with `0 < p ≤ q` and `pq < 2^63`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) struct SmallRatio {
    pub p: u64,
    pub q: u64,
}

impl SmallRatio {
    pub(crate) fn of(q: &num_rational::BigRational) -> Option<Self> {
        let p = q.numer().to_u64()?;
        let d = q.denom().to_u64()?;
        (p > 0 && p <= d && p.checked_mul(d).is_some_and(|c| c < 1 << 63)).then_some(Self { p, q: d })
    }

    pub(crate) fn modulus(&self) -> u64 {
        self.p * self.q
    }
}

/// The least `m ≥ 0` such that the largest cell in `a·(X/2^ℓ, (X+1)/2^ℓ)`
/// has length `2^-(ℓ+m)`, given `X mod q`.
pub(crate) fn forward_exponent(a: SmallRatio, x_mod_q: u64) -> u64 {
    let (p, q) = (a.p as u128, a.q as u128);
    // r_m = p·X·2^m mod q; the cell at 2^-(ℓ+m) fits iff 2q − r_m < p·2^m.
    let mut r = p % q * x_mod_q as u128 % q;
    let mut m = 0u64;
    loop {
        if m >= 64 || 2 * q - r < p << m {
            return m;
        }
        r = 2 * r % q;
        m += 1;
    }
}

/// `v mod c·2^e`.
fn mod_c_pow2(v: &BigUint, c: u64, e: u64) -> BigUint {
    let low = v & ((BigUint::one() << e) - 1u32);
    (((v >> e) % c) << e) | low
}

fn low_bits(v: &BigUint, n: u64) -> BigUint {
    v & ((BigUint::one() << n) - 1u32)
}

pub(crate) struct Step {
    pub tau_prime_len: u64,
    pub tau_len: u64,
    pub rho_len: u64,
}

/// Extends `x` in place from `σ` to `ρ` for the payload `b`.
pub(crate) fn extend_windowed(x: &mut BitString, pm: &mut PrefixMod, a: SmallRatio, b: &BitString) -> Result<Step> {
    let (p, q) = (a.p, a.q);
    let c = a.modulus();
    let l = x.len() as u64;
    let lb = b.len() as u64;
    if lb == 0 {
        return Err(Error::Invalid("payload block must be nonempty".into()));
    }

    // X mod c·2^G
    let (hi, low) = if l > G {
        (pm.at(x, (l - G) as usize), x.slice((l - G) as usize, l as usize).to_biguint())
    } else {
        (0, x.to_biguint())
    };
    let xw = (BigUint::from(hi) << G) | low;
    let m = forward_exponent(a, (&xw % q).to_u64().unwrap());

    // j_I mod p·2^G, where j_I − 1 = ⌊p·X·2^m / q⌋
    let aw = mod_c_pow2(&((&xw * p) << m), c, G);
    let mut ji = aw / q + 1u32;
    if ji == BigUint::from(p) << G {
        ji = BigUint::zero();
    }
    let tau_prime_len = l + m;
    let tau_len = tau_prime_len + lb;

    // T mod p·2^E with T = j_I·2^ℓb + b
    let e = G + lb;
    let tm = (ji << lb) | b.to_biguint();

    // inverse image: cells of length 2^-(L+m') in (q T, q(T+1)) / (p 2^L)
    let ratio = q / p;
    let start = -(63 - ratio.leading_zeros() as i64) - 1;
    let qt = &tm * q;
    let mut mp = start;
    let (jj, mn) = loop {
        let mm = mp.max(0) as u64;
        let mn = (-mp).max(0) as u64;
        let d = BigUint::from(p) << mn;
        let num = &qt << mm;
        let r = &num % &d;
        if (&d << 1u32) - r < BigUint::from(q) << mm {
            let y = mod_c_pow2(&num, p, e);
            break ((y >> mn) / p + 1u32, mn);
        }
        mp += 1;
        if mp > 8 {
            return Err(Error::Degenerate("no dyadic cell in the inverse image".into()));
        }
    };
    let rho_len = (tau_len as i64 + mp) as u64;
    let known = e - mn;
    if rho_len <= l {
        return Err(Error::Invalid(format!(
            "extension of a {l}-bit prefix does not extend it ({rho_len} bits)"
        )));
    }
    let new = rho_len - l;
    let ov = OVERLAP.min(l);
    if new + ov > known {
        return Err(Error::PrecisionExhausted { bits: known, context: "windowed extension".into() });
    }
    let jj = low_bits(&jj, known);
    let check = low_bits(&(&jj >> new), ov);
    if check != x.slice((l - ov) as usize, l as usize).to_biguint() {
        return Err(Error::Invalid("windowed extension disagrees with the prefix".into()));
    }
    x.extend(&BitString::from_biguint(&low_bits(&jj, new), new as usize));
    Ok(Step { tau_prime_len, tau_len, rho_len })
}
