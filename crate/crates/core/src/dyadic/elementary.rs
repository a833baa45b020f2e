//! Outward-rounded interval arithmetic on dyadics and certified enclosures
//! of π, cos, atan, sqrt and reciprocals.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use num_bigint::{BigInt, BigUint};
use num_integer::{Integer, Roots};
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use super::{bigint_of, Dyadic};

/// A closed interval `[lo, hi]` used for intermediate computations.
#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) struct Iv {
    pub lo: Dyadic,
    pub hi: Dyadic,
}

impl Iv {
    pub fn new(lo: Dyadic, hi: Dyadic) -> Self {
        debug_assert!(lo <= hi, "inverted interval [{lo}, {hi}]");
        Self { lo, hi }
    }

    pub fn point(x: Dyadic) -> Self {
        Self { lo: x.clone(), hi: x }
    }

    pub fn width(&self) -> Dyadic {
        &self.hi - &self.lo
    }

    /// `max(|lo|, |hi|)`.
    pub fn mag(&self) -> Dyadic {
        Dyadic::max(&self.lo.abs(), &self.hi.abs())
    }

    pub fn contains_zero(&self) -> bool {
        !self.lo.is_positive() && !self.hi.is_negative()
    }

    pub fn round_out(&self, w: u64) -> Self {
        Self { lo: self.lo.round_down(w), hi: self.hi.round_up(w) }
    }

    pub fn add(&self, o: &Iv) -> Iv {
        Iv { lo: &self.lo + &o.lo, hi: &self.hi + &o.hi }
    }

    pub fn sub(&self, o: &Iv) -> Iv {
        Iv { lo: &self.lo - &o.hi, hi: &self.hi - &o.lo }
    }

    pub fn neg(&self) -> Iv {
        Iv { lo: -&self.hi, hi: -&self.lo }
    }

    pub fn abs(&self) -> Iv {
        if !self.lo.is_negative() {
            self.clone()
        } else if !self.hi.is_positive() {
            self.neg()
        } else {
            Iv { lo: Dyadic::zero(), hi: self.mag() }
        }
    }

    pub fn mul(&self, o: &Iv) -> Iv {
        let c = [&self.lo * &o.lo, &self.lo * &o.hi, &self.hi * &o.lo, &self.hi * &o.hi];
        let lo = c.iter().min().unwrap().clone();
        let hi = c.iter().max().unwrap().clone();
        Iv { lo, hi }
    }

    pub fn sqr(&self) -> Iv {
        let a = &self.lo * &self.lo;
        let b = &self.hi * &self.hi;
        if self.contains_zero() {
            Iv { lo: Dyadic::zero(), hi: Dyadic::max(&a, &b) }
        } else {
            Iv { lo: Dyadic::min(&a, &b), hi: Dyadic::max(&a, &b) }
        }
    }

    pub fn mul_pow2(&self, e: i64) -> Iv {
        Iv { lo: self.lo.mul_pow2(e), hi: self.hi.mul_pow2(e) }
    }

    /// Multiply by an exact rational, rounding outward to `w` bits.
    pub fn mul_rational(&self, q: &BigRational, w: u64) -> Iv {
        let a = mul_rational_floor(&self.lo, q, w);
        let b = mul_rational_ceil(&self.lo, q, w);
        let c = mul_rational_floor(&self.hi, q, w);
        let d = mul_rational_ceil(&self.hi, q, w);
        if q.is_negative() {
            Iv { lo: c, hi: b }
        } else {
            Iv { lo: a, hi: d }
        }
    }

    /// Divide by a nonzero integer, rounding outward to `w` bits.
    pub fn div_int(&self, n: u64, w: u64) -> Iv {
        let q = BigRational::new(BigInt::one(), BigInt::from(n));
        self.mul_rational(&q, w)
    }

    /// Reciprocal, rounded outward to `w` bits. The interval must exclude zero.
    pub fn recip(&self, w: u64) -> Iv {
        debug_assert!(!self.contains_zero());
        Iv { lo: recip_floor(&self.hi, w), hi: recip_ceil(&self.lo, w) }
    }

    /// Square root of the nonnegative part, rounded outward to `w` bits.
    pub fn sqrt(&self, w: u64) -> Iv {
        let lo = if self.lo.is_positive() { sqrt_floor(&self.lo, w) } else { Dyadic::zero() };
        let hi = if self.hi.is_positive() { sqrt_ceil(&self.hi, w) } else { Dyadic::zero() };
        Iv { lo, hi }
    }

    pub fn intersect(&self, o: &Iv) -> Option<Iv> {
        let lo = Dyadic::max(&self.lo, &o.lo);
        let hi = Dyadic::min(&self.hi, &o.hi);
        (lo <= hi).then_some(Iv { lo, hi })
    }
}

fn mul_rational_floor(d: &Dyadic, q: &BigRational, w: u64) -> Dyadic {
    // ⌊d · q · 2^w⌋ / 2^w
    let num = d.floor_scaled_exact_num(q.numer(), w);
    let den = q.denom() << d.exponent();
    Dyadic::new(num.div_floor(&den), w)
}

fn mul_rational_ceil(d: &Dyadic, q: &BigRational, w: u64) -> Dyadic {
    let num = d.floor_scaled_exact_num(q.numer(), w);
    let den = q.denom() << d.exponent();
    Dyadic::new(-((-num).div_floor(&den)), w)
}

impl Dyadic {
    /// `num · p · 2^w`, the numerator of `d·p·2^w` over `2^exp`.
    fn floor_scaled_exact_num(&self, p: &BigInt, w: u64) -> BigInt {
        (self.numerator() * p) << w
    }
}

fn recip_floor(d: &Dyadic, w: u64) -> Dyadic {
    // 1/d = 2^exp / num
    let num = BigInt::one() << (w + d.exponent());
    Dyadic::new(num.div_floor(d.numerator()), w)
}

fn recip_ceil(d: &Dyadic, w: u64) -> Dyadic {
    let num = BigInt::one() << (w + d.exponent());
    Dyadic::new(-((-num).div_floor(d.numerator())), w)
}

/// `⌊√d · 2^w⌋ / 2^w` for `d ≥ 0`.
pub(crate) fn sqrt_floor(d: &Dyadic, w: u64) -> Dyadic {
    // √(num/2^e) · 2^w = √(num · 2^(2w - e)); make the exponent even.
    let e = d.exponent();
    let (m, extra) = if e.is_multiple_of(2) { (d.numerator().clone(), 0) } else { (d.numerator() << 1u32, 1) };
    let e = e + extra;
    let scaled = if 2 * w >= e { m << (2 * w - e) } else { m >> (e - 2 * w) };
    let r = scaled.magnitude().sqrt();
    Dyadic::new(bigint_of(r), w)
}

pub(crate) fn sqrt_ceil(d: &Dyadic, w: u64) -> Dyadic {
    let f = sqrt_floor(d, w);
    if &(&f * &f) == d {
        f
    } else {
        &f + &Dyadic::new(1, w)
    }
}

/// cos on an interval argument, accurate to about `2^-w` beyond the
/// interval's own width.
pub(crate) fn cos_iv(x: &Iv, w: u64) -> Iv {
    let mag_bits = x.mag().magnitude_bits().max(0) as u64;
    let h = w.sqrt() / 2 + 2 + mag_bits;
    let wp = w + 2 * h + 24;
    let z = x.mul_pow2(-(h as i64));
    let z2 = z.sqr().round_out(wp);
    let tiny = Dyadic::new(1, wp);
    let mut sum = Iv::point(Dyadic::one());
    let mut term = Iv::point(Dyadic::one());
    let mut i = 1u64;
    loop {
        term = term.mul(&z2).div_int((2 * i - 1) * (2 * i), wp).round_out(wp);
        if term.mag() <= tiny {
            let r = term.mag();
            sum = Iv { lo: &sum.lo - &r, hi: &sum.hi + &r };
            break;
        }
        sum = if i % 2 == 1 { sum.sub(&term) } else { sum.add(&term) };
        i += 1;
    }
    let one = Iv::point(Dyadic::one());
    let mut c = sum.round_out(wp);
    for _ in 0..h {
        c = c.sqr().mul_pow2(1).sub(&one).round_out(wp);
    }
    let unit = Iv::new(-Dyadic::one(), Dyadic::one());
    c.intersect(&unit).unwrap_or(unit).round_out(w + 2)
}

/// atan of an exact dyadic, as an enclosure of width about `2^-w`.
pub(crate) fn atan_point(d: &Dyadic, w: u64) -> Iv {
    if d.is_negative() {
        return atan_point(&-d, w).neg();
    }
    if d.is_zero() {
        return Iv::point(Dyadic::zero());
    }
    let wp = w + 8;
    if d > &Dyadic::one() {
        // atan d = π/2 - atan(1/d)
        let r = Iv::point(d.clone()).recip(wp + 4);
        let inner = atan_reduced(&r, wp + 4);
        let half_pi = pi_iv(wp + 4).mul_pow2(-1);
        return half_pi.sub(&inner).round_out(w + 2);
    }
    atan_reduced(&Iv::point(d.clone()), wp).round_out(w + 2)
}

/// atan on an interval inside `[0, 1]`, by argument halving and Taylor series.
fn atan_reduced(x: &Iv, w: u64) -> Iv {
    let r = w.sqrt() / 2 + 2;
    let wp = w + r + 24;
    let one = Iv::point(Dyadic::one());
    let mut y = x.round_out(wp);
    for _ in 0..r {
        // atan y = 2 atan(y / (1 + √(1 + y²)))
        let den = one.add(&one.add(&y.sqr()).sqrt(wp)).round_out(wp);
        y = y.mul(&den.recip(wp)).round_out(wp);
    }
    let y2 = y.sqr().round_out(wp);
    let tiny = Dyadic::new(1, wp);
    let mut power = y.clone();
    let mut sum = y.clone();
    let mut i = 1u64;
    loop {
        power = power.mul(&y2).round_out(wp);
        let term = power.div_int(2 * i + 1, wp);
        if term.mag() <= tiny {
            let m = term.mag();
            sum = Iv { lo: &sum.lo - &m, hi: &sum.hi + &m };
            break;
        }
        sum = if i % 2 == 1 { sum.sub(&term) } else { sum.add(&term) };
        sum = sum.round_out(wp);
        i += 1;
    }
    sum.mul_pow2(r as i64)
}

/// atan on an interval: atan is increasing, so evaluate at the endpoints.
pub(crate) fn atan_iv(x: &Iv, w: u64) -> Iv {
    let lo = atan_point(&x.lo, w).lo;
    let hi = atan_point(&x.hi, w).hi;
    Iv::new(lo, hi)
}

/// `atan(1/m)` for an integer `m ≥ 2`, in fixed point with `w` fraction bits.
fn atan_inv(m: u64, w: u64) -> (BigInt, BigInt) {
    let w = w + 16;
    let m2 = BigUint::from(m * m);
    let mut x = (BigUint::one() << w) / m; // ⌊2^w / m^(2i+1)⌋
    let mut lo = BigInt::zero();
    let mut hi = BigInt::zero();
    let mut i = 0u64;
    while !x.is_zero() {
        let t = bigint_of(&x / (2 * i + 1));
        if i.is_multiple_of(2) {
            lo += &t;
            hi += &t + 1;
        } else {
            lo -= &t + 1;
            hi -= &t;
        }
        x /= &m2;
        i += 1;
    }
    // Tail below one unit of the last place.
    lo -= 1;
    hi += 1;
    (lo >> 16u32, -((-hi) >> 16u32))
}

fn pi_cache() -> &'static Mutex<HashMap<u64, Iv>> {
    static CACHE: OnceLock<Mutex<HashMap<u64, Iv>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// An enclosure of π with width at most `2^-w`, via Machin's formula.
/// Computed at the next power-of-two precision and cached.
pub(crate) fn pi_iv(w: u64) -> Iv {
    let p = (w + 8).next_power_of_two().max(64);
    if let Some(iv) = pi_cache().lock().unwrap().get(&p) {
        return iv.clone();
    }
    let (a_lo, a_hi) = atan_inv(5, p + 8);
    let (b_lo, b_hi) = atan_inv(239, p + 8);
    // π = 16 atan(1/5) - 4 atan(1/239)
    let lo = Dyadic::new((a_lo << 4u32) - (b_hi << 2u32), p + 8);
    let hi = Dyadic::new((a_hi << 4u32) - (b_lo << 2u32), p + 8);
    let iv = Iv::new(lo, hi).round_out(p);
    pi_cache().lock().unwrap().insert(p, iv.clone());
    iv
}
