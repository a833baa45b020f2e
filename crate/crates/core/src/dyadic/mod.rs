//! Exact dyadic rationals and intervals, certified real streams, and the
//! dyadic-search primitives behind the extension step.

mod elementary;
mod image;
mod real;
mod scaled;

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::{BigInt, BigUint, Sign};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::bits::BitString;
use crate::error::{Error, Result};

pub use image::{
    certify_inside, mul_point_enclosure, product_prefix, scale_interval_inner, Containment, Multiplier,
};
pub(crate) use image::image_cell;
pub use real::Real;
pub(crate) use scaled::{largest_cell, Scaled};

/// The exact rational `num / 2^exp`, kept canonical: `num` odd or `exp = 0`.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct Dyadic {
    num: BigInt,
    exp: u64,
}

impl Dyadic {
    pub fn new(num: impl Into<BigInt>, exp: u64) -> Self {
        let num = num.into();
        if num.is_zero() {
            return Self { num, exp: 0 };
        }
        let tz = num.trailing_zeros().unwrap_or(0).min(exp);
        if tz == 0 {
            Self { num, exp }
        } else {
            Self { num: num >> tz, exp: exp - tz }
        }
    }

    pub fn zero() -> Self {
        Self::default()
    }

    pub fn one() -> Self {
        Self::from_int(1)
    }

    pub fn from_int(n: impl Into<BigInt>) -> Self {
        Self { num: n.into(), exp: 0 }
    }

    /// `0.σ` exactly.
    pub fn from_bits(sigma: &BitString) -> Self {
        Self::new(BigInt::from_biguint(Sign::Plus, sigma.to_biguint()), sigma.len() as u64)
    }

    pub fn numerator(&self) -> &BigInt {
        &self.num
    }

    pub fn exponent(&self) -> u64 {
        self.exp
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn is_negative(&self) -> bool {
        self.num.is_negative()
    }

    pub fn is_positive(&self) -> bool {
        self.num.is_positive()
    }

    pub fn abs(&self) -> Self {
        Self { num: self.num.abs(), exp: self.exp }
    }

    /// `self · 2^e`.
    pub fn mul_pow2(&self, e: i64) -> Self {
        if self.is_zero() {
            return self.clone();
        }
        if e >= 0 {
            let e = e as u64;
            if e <= self.exp {
                Self { num: self.num.clone(), exp: self.exp - e }
            } else {
                Self { num: &self.num << (e - self.exp), exp: 0 }
            }
        } else {
            Self::new(self.num.clone(), self.exp + e.unsigned_abs())
        }
    }

    /// `⌊self · 2^k⌋`.
    pub fn floor_scaled(&self, k: u64) -> BigInt {
        if k >= self.exp {
            &self.num << (k - self.exp)
        } else {
            // Shr on BigInt rounds toward negative infinity.
            &self.num >> (self.exp - k)
        }
    }

    /// `⌈self · 2^k⌉`.
    pub fn ceil_scaled(&self, k: u64) -> BigInt {
        -(-self).floor_scaled(k)
    }

    /// Largest multiple of `2^-k` not above `self`.
    pub fn round_down(&self, k: u64) -> Self {
        if self.exp <= k {
            return self.clone();
        }
        Self::new(self.floor_scaled(k), k)
    }

    /// Smallest multiple of `2^-k` not below `self`.
    pub fn round_up(&self, k: u64) -> Self {
        if self.exp <= k {
            return self.clone();
        }
        Self::new(self.ceil_scaled(k), k)
    }

    /// An integer `e` with `|self| < 2^e` (and `|self| ≥ 2^(e-2)` when nonzero).
    pub fn magnitude_bits(&self) -> i64 {
        if self.is_zero() {
            return i64::MIN / 4;
        }
        self.num.bits() as i64 - self.exp as i64
    }

    pub fn to_rational(&self) -> BigRational {
        BigRational::new_raw(self.num.clone(), BigInt::one() << self.exp)
    }

    /// Lossy; for display and plotting only.
    pub fn to_f64(&self) -> f64 {
        let bits = self.num.bits();
        if bits > 1000 {
            let cut = bits - 64;
            let top = (&self.num >> cut).to_f64().unwrap_or(0.0);
            return top * 2f64.powi(cut as i32 - self.exp as i32);
        }
        self.num.to_f64().unwrap_or(f64::NAN) * 2f64.powi(-(self.exp.min(100_000) as i32))
    }

    pub fn min(a: &Self, b: &Self) -> Self {
        if a <= b { a.clone() } else { b.clone() }
    }

    pub fn max(a: &Self, b: &Self) -> Self {
        if a >= b { a.clone() } else { b.clone() }
    }
}

impl Ord for Dyadic {
    fn cmp(&self, other: &Self) -> Ordering {
        match self.exp.cmp(&other.exp) {
            Ordering::Equal => self.num.cmp(&other.num),
            Ordering::Less => (&self.num << (other.exp - self.exp)).cmp(&other.num),
            Ordering::Greater => self.num.cmp(&(&other.num << (self.exp - other.exp))),
        }
    }
}

impl PartialOrd for Dyadic {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn aligned(a: &Dyadic, b: &Dyadic) -> (BigInt, BigInt, u64) {
    let e = a.exp.max(b.exp);
    (&a.num << (e - a.exp), &b.num << (e - b.exp), e)
}

impl Add for &Dyadic {
    type Output = Dyadic;
    fn add(self, rhs: &Dyadic) -> Dyadic {
        let (a, b, e) = aligned(self, rhs);
        Dyadic::new(a + b, e)
    }
}

impl Sub for &Dyadic {
    type Output = Dyadic;
    fn sub(self, rhs: &Dyadic) -> Dyadic {
        let (a, b, e) = aligned(self, rhs);
        Dyadic::new(a - b, e)
    }
}

impl Mul for &Dyadic {
    type Output = Dyadic;
    fn mul(self, rhs: &Dyadic) -> Dyadic {
        Dyadic::new(&self.num * &rhs.num, self.exp + rhs.exp)
    }
}

impl Neg for &Dyadic {
    type Output = Dyadic;
    fn neg(self) -> Dyadic {
        Dyadic { num: -&self.num, exp: self.exp }
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr for Dyadic {
            type Output = Dyadic;
            fn $m(self, rhs: Dyadic) -> Dyadic {
                (&self).$m(&rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

impl Neg for Dyadic {
    type Output = Dyadic;
    fn neg(self) -> Dyadic {
        -&self
    }
}

impl fmt::Display for Dyadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/2^{}", self.num, self.exp)
    }
}

impl fmt::Debug for Dyadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.num.bits() > 128 {
            write!(f, "Dyadic(~{:e}, 2^-{})", self.to_f64(), self.exp)
        } else {
            write!(f, "Dyadic({self})")
        }
    }
}

impl FromStr for Dyadic {
    type Err = Error;

    /// Accepts `j/2^k` or a bare integer `j`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::Parse(format!("invalid dyadic `{s}`"));
        match s.split_once('/') {
            None => Ok(Dyadic::from_int(s.parse::<BigInt>().map_err(|_| bad())?)),
            Some((j, k)) => {
                let j: BigInt = j.trim().parse().map_err(|_| bad())?;
                let k: u64 = k.trim().strip_prefix("2^").ok_or_else(bad)?.parse().map_err(|_| bad())?;
                Ok(Dyadic::new(j, k))
            }
        }
    }
}

impl Serialize for Dyadic {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Dyadic {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Openness {
    Open,
    Closed,
}

/// An interval with exact dyadic endpoints.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct DyadicInterval {
    lo: Dyadic,
    hi: Dyadic,
    openness: Openness,
}

impl DyadicInterval {
    pub fn open(lo: Dyadic, hi: Dyadic) -> Result<Self> {
        if lo >= hi {
            return Err(Error::Degenerate(format!("open interval ({lo},{hi}) is empty")));
        }
        Ok(Self { lo, hi, openness: Openness::Open })
    }

    pub fn closed(lo: Dyadic, hi: Dyadic) -> Result<Self> {
        if lo > hi {
            return Err(Error::Degenerate(format!("closed interval [{lo},{hi}] is empty")));
        }
        Ok(Self { lo, hi, openness: Openness::Closed })
    }

    pub fn point(x: Dyadic) -> Self {
        Self { lo: x.clone(), hi: x, openness: Openness::Closed }
    }

    pub fn lo(&self) -> &Dyadic {
        &self.lo
    }

    pub fn hi(&self) -> &Dyadic {
        &self.hi
    }

    pub fn openness(&self) -> Openness {
        self.openness
    }

    pub fn is_open(&self) -> bool {
        self.openness == Openness::Open
    }

    pub fn diameter(&self) -> Dyadic {
        &self.hi - &self.lo
    }

    pub fn contains(&self, x: &Dyadic) -> bool {
        match self.openness {
            Openness::Open => &self.lo < x && x < &self.hi,
            Openness::Closed => &self.lo <= x && x <= &self.hi,
        }
    }

    /// `self ⊆ other`, honouring the openness of both.
    pub fn is_subset_of(&self, other: &DyadicInterval) -> bool {
        let strict = other.is_open() && !self.is_open();
        if strict {
            other.lo < self.lo && self.hi < other.hi
        } else {
            other.lo <= self.lo && self.hi <= other.hi
        }
    }

    pub fn intersect(&self, other: &DyadicInterval) -> Option<DyadicInterval> {
        let lo = Dyadic::max(&self.lo, &other.lo);
        let hi = Dyadic::min(&self.hi, &other.hi);
        let openness = if self.is_open() || other.is_open() { Openness::Open } else { Openness::Closed };
        match openness {
            Openness::Open if lo < hi => Some(Self { lo, hi, openness }),
            Openness::Closed if lo <= hi => Some(Self { lo, hi, openness }),
            _ => None,
        }
    }
}

impl fmt::Display for DyadicInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.openness {
            Openness::Open => write!(f, "({},{})", self.lo, self.hi),
            Openness::Closed => write!(f, "[{},{}]", self.lo, self.hi),
        }
    }
}

impl fmt::Debug for DyadicInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (l, r) = if self.is_open() { ('(', ')') } else { ('[', ']') };
        write!(f, "{l}{:?}, {:?}{r}", self.lo, self.hi)
    }
}

impl FromStr for DyadicInterval {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::Parse(format!("invalid interval `{s}`"));
        let openness = match (s.chars().next(), s.chars().last()) {
            (Some('('), Some(')')) => Openness::Open,
            (Some('['), Some(']')) => Openness::Closed,
            _ => return Err(bad()),
        };
        let (lo, hi) = s[1..s.len() - 1].split_once(',').ok_or_else(bad)?;
        let (lo, hi) = (lo.parse()?, hi.parse()?);
        match openness {
            Openness::Open => Self::open(lo, hi),
            Openness::Closed => Self::closed(lo, hi),
        }
    }
}

impl Serialize for DyadicInterval {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for DyadicInterval {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

/// The closed dyadic interval `[j/2^k, (j+1)/2^k]`, keeping `k` explicit so
/// its left endpoint can be read back as a `k`-digit string.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct DyadicCell {
    pub j: BigInt,
    pub k: u64,
}

impl DyadicCell {
    pub fn left(&self) -> Dyadic {
        Dyadic::new(self.j.clone(), self.k)
    }

    pub fn right(&self) -> Dyadic {
        Dyadic::new(&self.j + 1, self.k)
    }

    pub fn to_interval(&self) -> DyadicInterval {
        DyadicInterval { lo: self.left(), hi: self.right(), openness: Openness::Closed }
    }

    /// The `k`-digit string `τ` with `0.τ` equal to the left endpoint.
    pub fn left_string(&self) -> Result<BitString> {
        let bound = BigInt::one() << self.k;
        if self.j.is_negative() || self.j >= bound {
            return Err(Error::Invalid(format!("cell [{},{}] is not inside [0,1]", self.left(), self.right())));
        }
        Ok(BitString::from_biguint(self.j.magnitude(), self.k as usize))
    }
}

/// The coding interval `[σ̃] = (0.σ, 0.σ + 2^-ℓ(σ))`.
pub fn interval_of(sigma: &BitString) -> DyadicInterval {
    let m = sigma.len() as u64;
    let j = BigInt::from_biguint(Sign::Plus, sigma.to_biguint());
    DyadicInterval { lo: Dyadic::new(j.clone(), m), hi: Dyadic::new(j + 1, m), openness: Openness::Open }
}

/// The largest closed dyadic interval inside the open interval `i`, with
/// ties broken toward the smallest left endpoint.
pub fn largest_closed_dyadic_in(i: &DyadicInterval) -> Result<DyadicInterval> {
    largest_cell_in(i).map(|c| c.to_interval())
}

pub fn largest_cell_in(i: &DyadicInterval) -> Result<DyadicCell> {
    if i.lo >= i.hi {
        return Err(Error::Degenerate(format!("interval {i} has zero diameter")));
    }
    if !i.is_open() {
        return Err(Error::Invalid(format!("expected an open interval, got {i}")));
    }
    largest_cell(&Scaled::from(&i.lo), &Scaled::from(&i.hi))
        .ok_or_else(|| Error::Degenerate(format!("no closed dyadic interval found in {i}")))
}

pub(crate) fn bigint_of(u: BigUint) -> BigInt {
    BigInt::from_biguint(Sign::Plus, u)
}
