use std::fmt;
use std::sync::{Arc, Mutex};

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use super::elementary::{atan_iv, cos_iv, pi_iv, Iv};
use super::{Dyadic, DyadicInterval};
use crate::error::{Error, Result};

/// Extra bits a stream may spend beyond the requested precision before
/// giving up with [`Error::PrecisionExhausted`].
pub const STREAM_PRECISION_CAP: u64 = 1 << 16;

/// Extra bits [`Real::sign_and_truncated_magnitude`] spends trying to
/// separate a value from a dyadic boundary.
pub const DIGIT_ESCALATION_CAP: u64 = 256;

/// A real number given by certified dyadic enclosures.
///
/// `query(n)` returns a closed interval of width at most `2^-n` containing
/// the value. Answers are nested in `n` and a pure function of `n`: the same
/// call always returns the same interval.
#[derive(Clone)]
pub struct Real(Arc<Inner>);

enum Inner {
    Exact(BigRational),
    Computed { node: Node, levels: Mutex<Vec<Iv>> },
}

type Oracle = Arc<dyn Fn(u64) -> (Dyadic, Dyadic) + Send + Sync>;

enum Node {
    Oracle(Oracle),
    Pi,
    Neg(Real),
    Abs(Real),
    Add(Real, Real),
    Sub(Real, Real),
    Mul(Real, Real),
    MulRational(Real, BigRational),
    Recip(Real),
    Sqrt(Real),
    Cos(Real),
    Atan(Real),
}

/// Precision of cached level `j`.
fn level_precision(j: usize) -> u64 {
    16u64 << j
}

fn level_for(n: u64) -> usize {
    let mut j = 0;
    while level_precision(j) < n {
        j += 1;
    }
    j
}

impl Real {
    fn computed(node: Node) -> Self {
        Real(Arc::new(Inner::Computed { node, levels: Mutex::new(Vec::new()) }))
    }

    pub fn from_rational(q: BigRational) -> Self {
        Real(Arc::new(Inner::Exact(q)))
    }

    /// `p / q`. Panics if `q = 0`.
    pub fn rational(p: i64, q: i64) -> Self {
        Self::from_rational(BigRational::new(p.into(), q.into()))
    }

    pub fn from_i64(n: i64) -> Self {
        Self::from_rational(BigRational::from_integer(n.into()))
    }

    /// `num / 2^exp`.
    pub fn dyadic(num: i64, exp: u64) -> Self {
        Self::from_dyadic(&Dyadic::new(num, exp))
    }

    pub fn from_dyadic(d: &Dyadic) -> Self {
        Self::from_rational(d.to_rational())
    }

    /// `p / q` for an exact value, as integers with `q > 0`.
    pub(crate) fn exact_parts(&self) -> Option<(&BigInt, &BigInt)> {
        self.as_rational().map(|q| (q.numer(), q.denom()))
    }

    /// A stream given by an enclosure oracle: `f(n)` must return `(lo, hi)`
    /// with `lo ≤ x ≤ hi` and `hi - lo ≤ 2^-n`.
    pub fn from_enclosures(f: impl Fn(u64) -> (Dyadic, Dyadic) + Send + Sync + 'static) -> Self {
        Self::computed(Node::Oracle(Arc::new(f)))
    }

    /// The rational `q` as an opaque stream, which never takes the exact
    /// shortcuts of [`Real::from_rational`].
    pub fn rational_stream(q: BigRational) -> Self {
        Self::from_enclosures(move |n| {
            let iv = exact_enclosure(&q, n);
            (iv.lo, iv.hi)
        })
    }

    pub fn pi() -> Self {
        Self::computed(Node::Pi)
    }

    pub fn as_rational(&self) -> Option<&BigRational> {
        match &*self.0 {
            Inner::Exact(q) => Some(q),
            Inner::Computed { .. } => None,
        }
    }

    pub fn is_exact(&self) -> bool {
        self.as_rational().is_some()
    }

    pub fn neg(&self) -> Self {
        match self.as_rational() {
            Some(q) => Self::from_rational(-q),
            None => Self::computed(Node::Neg(self.clone())),
        }
    }

    pub fn abs(&self) -> Self {
        match self.as_rational() {
            Some(q) => Self::from_rational(q.abs()),
            None => Self::computed(Node::Abs(self.clone())),
        }
    }

    pub fn add(&self, other: &Real) -> Self {
        match (self.as_rational(), other.as_rational()) {
            (Some(a), Some(b)) => Self::from_rational(a + b),
            _ => Self::computed(Node::Add(self.clone(), other.clone())),
        }
    }

    pub fn sub(&self, other: &Real) -> Self {
        match (self.as_rational(), other.as_rational()) {
            (Some(a), Some(b)) => Self::from_rational(a - b),
            _ => Self::computed(Node::Sub(self.clone(), other.clone())),
        }
    }

    pub fn mul(&self, other: &Real) -> Self {
        match (self.as_rational(), other.as_rational()) {
            (Some(a), Some(b)) => Self::from_rational(a * b),
            (Some(a), None) => other.mul_rational(a),
            (None, Some(b)) => self.mul_rational(b),
            _ => Self::computed(Node::Mul(self.clone(), other.clone())),
        }
    }

    pub fn mul_rational(&self, q: &BigRational) -> Self {
        match self.as_rational() {
            Some(a) => Self::from_rational(a * q),
            None if q.is_zero() => Self::from_i64(0),
            None if q.is_one() => self.clone(),
            None => Self::computed(Node::MulRational(self.clone(), q.clone())),
        }
    }

    /// `1 / self`. Queries fail if the value cannot be separated from zero.
    pub fn recip(&self) -> Self {
        match self.as_rational() {
            Some(q) if !q.is_zero() => Self::from_rational(q.recip()),
            _ => Self::computed(Node::Recip(self.clone())),
        }
    }

    /// `√self`, for a nonnegative value.
    pub fn sqrt(&self) -> Self {
        Self::computed(Node::Sqrt(self.clone()))
    }

    pub fn cos(&self) -> Self {
        match self.as_rational() {
            Some(q) if q.is_zero() => Self::from_i64(1),
            _ => Self::computed(Node::Cos(self.clone())),
        }
    }

    pub fn sin(&self) -> Self {
        // sin x = cos(x - π/2)
        let half_pi = Self::pi().mul_rational(&BigRational::new(1.into(), 2.into()));
        self.sub(&half_pi).cos()
    }

    pub fn atan(&self) -> Self {
        match self.as_rational() {
            Some(q) if q.is_zero() => Self::from_i64(0),
            _ => Self::computed(Node::Atan(self.clone())),
        }
    }

    /// A closed enclosure of width at most `2^-n`.
    pub fn query(&self, n: u64) -> Result<DyadicInterval> {
        let iv = self.enclose(n)?;
        Ok(DyadicInterval::closed(iv.lo, iv.hi).expect("enclosures are nonempty"))
    }

    pub(crate) fn enclose(&self, n: u64) -> Result<Iv> {
        match &*self.0 {
            Inner::Exact(q) => Ok(exact_enclosure(q, n)),
            Inner::Computed { node, levels } => {
                let want = level_for(n);
                let mut cache = levels.lock().unwrap();
                while cache.len() <= want {
                    let j = cache.len();
                    let raw = raw_enclosure(node, level_precision(j))?;
                    let next = match cache.last() {
                        Some(prev) => prev.intersect(&raw).ok_or_else(|| Error::PrecisionExhausted {
                            bits: level_precision(j),
                            context: "inconsistent enclosures".into(),
                        })?,
                        None => raw,
                    };
                    cache.push(next);
                }
                Ok(cache[want].clone())
            }
        }
    }

    /// An integer `e` with `|x| ≤ 2^e`, from a coarse enclosure.
    pub(crate) fn magnitude_bound(&self) -> Result<i64> {
        let iv = self.enclose(4)?;
        let m = iv.mag();
        Ok(if m.is_zero() { 0 } else { m.magnitude_bits().max(0) })
    }

    /// The sign of `x` and `⌊|x| · 2^k⌋`. Fails with
    /// [`Error::UndeterminedBits`] when no enclosure within the escalation cap
    /// decides them, which happens when `|x| · 2^k` is an integer the stream
    /// cannot certify.
    pub fn sign_and_truncated_magnitude(&self, k: u64) -> Result<(bool, BigUint)> {
        if let Some(q) = self.as_rational() {
            let mag = crate::bits::floor_scaled_rational(&q.abs(), k);
            return Ok((q.is_negative(), mag.magnitude().clone()));
        }
        let mut extra = 8;
        while extra <= DIGIT_ESCALATION_CAP {
            let iv = self.enclose(k + extra)?;
            let (neg, a, b) = if !iv.lo.is_negative() {
                (false, iv.lo.floor_scaled(k), iv.hi.floor_scaled(k))
            } else if iv.hi.is_negative() {
                (true, (-&iv.hi).floor_scaled(k), (-&iv.lo).floor_scaled(k))
            } else {
                (false, BigInt::zero(), BigInt::one())
            };
            if a == b {
                return Ok((neg, a.magnitude().clone()));
            }
            extra *= 2;
        }
        Err(Error::UndeterminedBits { precision: k })
    }

    /// Lossy midpoint, for display.
    pub fn approx_f64(&self) -> f64 {
        match self.enclose(64) {
            Ok(iv) => (iv.lo.to_f64() + iv.hi.to_f64()) / 2.0,
            Err(_) => f64::NAN,
        }
    }

    /// The exact sign, if it can be certified within `extra` bits.
    pub fn certified_sign(&self, extra: u64) -> Result<Option<std::cmp::Ordering>> {
        use std::cmp::Ordering::*;
        if let Some(q) = self.as_rational() {
            return Ok(Some(q.cmp(&BigRational::zero())));
        }
        let mut n = 8;
        while n <= extra {
            let iv = self.enclose(n)?;
            if iv.lo.is_positive() {
                return Ok(Some(Greater));
            }
            if iv.hi.is_negative() {
                return Ok(Some(Less));
            }
            n *= 2;
        }
        Ok(None)
    }
}

fn exact_enclosure(q: &BigRational, n: u64) -> Iv {
    let scaled = q.numer() << n;
    let lo = scaled.div_floor(q.denom());
    let hi = -((-scaled).div_floor(q.denom()));
    Iv::new(Dyadic::new(lo, n), Dyadic::new(hi, n))
}

/// An enclosure of width at most `2^-p`, escalating working precision.
fn raw_enclosure(node: &Node, p: u64) -> Result<Iv> {
    let target = Dyadic::new(1, p);
    let mut guard = 8;
    loop {
        let iv = eval(node, p + guard)?;
        if iv.width() <= target {
            return Ok(iv);
        }
        if guard > STREAM_PRECISION_CAP {
            return Err(Error::PrecisionExhausted { bits: p + guard, context: "stream enclosure".into() });
        }
        guard *= 2;
    }
}

/// An enclosure whose width is about `2^-w`; the caller checks the width.
fn eval(node: &Node, w: u64) -> Result<Iv> {
    Ok(match node {
        Node::Oracle(f) => {
            let (lo, hi) = f(w);
            if lo > hi {
                return Err(Error::Invalid("enclosure oracle returned an empty interval".into()));
            }
            Iv::new(lo, hi)
        }
        Node::Pi => pi_iv(w),
        Node::Neg(x) => x.enclose(w)?.neg(),
        Node::Abs(x) => x.enclose(w)?.abs(),
        Node::Add(x, y) => x.enclose(w + 1)?.add(&y.enclose(w + 1)?),
        Node::Sub(x, y) => x.enclose(w + 1)?.sub(&y.enclose(w + 1)?),
        Node::Mul(x, y) => {
            let mx = x.magnitude_bound()? as u64;
            let my = y.magnitude_bound()? as u64;
            let a = x.enclose(w + 2 + my)?;
            let b = y.enclose(w + 2 + mx)?;
            a.mul(&b).round_out(w + 2)
        }
        Node::MulRational(x, q) => {
            let mq = (q.numer().bits() as i64 - q.denom().bits() as i64 + 1).max(0) as u64;
            x.enclose(w + 1 + mq)?.mul_rational(q, w + 2)
        }
        Node::Recip(x) => {
            let mut n = 8;
            let lower = loop {
                let iv = x.enclose(n)?;
                if !iv.contains_zero() {
                    break Dyadic::min(&iv.lo.abs(), &iv.hi.abs());
                }
                if n > w + STREAM_PRECISION_CAP {
                    return Err(Error::PrecisionExhausted {
                        bits: n,
                        context: "reciprocal of a value not separated from zero".into(),
                    });
                }
                n *= 2;
            };
            let inv_bits = (-lower.magnitude_bits() + 2).max(0) as u64;
            x.enclose(w + 2 + 2 * inv_bits)?.recip(w + 2)
        }
        Node::Sqrt(x) => {
            let iv = x.enclose(2 * w + 4)?;
            if iv.hi.is_negative() {
                return Err(Error::Invalid("square root of a negative value".into()));
            }
            iv.sqrt(w + 2)
        }
        Node::Cos(x) => cos_iv(&x.enclose(w + 4)?, w + 4),
        Node::Atan(x) => atan_iv(&x.enclose(w + 4)?, w + 4),
    })
}

impl fmt::Debug for Real {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &*self.0 {
            Inner::Exact(q) => write!(f, "Real({q})"),
            Inner::Computed { .. } => write!(f, "Real(~{})", self.approx_f64()),
        }
    }
}
