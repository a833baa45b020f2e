use num_integer::Integer;
use num_rational::BigRational;
use num_traits::Signed;
use serde::Serialize;

use super::elementary::Iv;
use super::real::STREAM_PRECISION_CAP;
use super::{bigint_of, largest_cell, Dyadic, DyadicCell, DyadicInterval, Real, Scaled};
use crate::bits::BitString;
use crate::error::{Error, Result};

/// Guard bits at which an uncertified inner answer is accepted.
const ACCEPT_GUARD: u64 = 64;

/// A multiplier `a ∈ (0, 1]` together with its reciprocal stream.
#[derive(Clone, Debug)]
pub struct Multiplier {
    value: Real,
    inverse: Real,
    /// `a ≥ 2^-inv_bits`.
    inv_bits: u64,
}

impl Multiplier {
    pub fn new(a: Real) -> Result<Self> {
        match a.certified_sign(1024)? {
            Some(std::cmp::Ordering::Greater) => {}
            Some(_) => return Err(Error::InvalidMultiplier(format!("{a:?} is not positive"))),
            None => return Err(Error::InvalidMultiplier(format!("cannot certify {a:?} > 0"))),
        }
        let mut n = 8;
        let lower = loop {
            let iv = a.enclose(n)?;
            if iv.lo.is_positive() {
                break iv.lo;
            }
            n *= 2;
        };
        if lower > Dyadic::one() {
            return Err(Error::InvalidMultiplier(format!("{a:?} exceeds 1")));
        }
        let inv_bits = (-lower.magnitude_bits() + 1).max(0) as u64;
        let inverse = a.recip();
        Ok(Self { value: a, inverse, inv_bits })
    }

    pub fn value(&self) -> &Real {
        &self.value
    }

    pub fn inverse(&self) -> &Real {
        &self.inverse
    }

    /// An integer `e ≥ 0` with `a ≥ 2^-e`.
    pub fn inv_bits(&self) -> u64 {
        self.inv_bits
    }

    pub fn as_rational(&self) -> Option<&BigRational> {
        self.value.as_rational()
    }
}

fn scaled_endpoints(i: &DyadicInterval, ai: &Iv) -> (Iv, Iv) {
    let (lo, hi) = (i.lo(), i.hi());
    let inner_lo = if lo.is_negative() { lo * &ai.lo } else { lo * &ai.hi };
    let inner_hi = if hi.is_negative() { hi * &ai.hi } else { hi * &ai.lo };
    let outer_lo = if lo.is_negative() { lo * &ai.hi } else { lo * &ai.lo };
    let outer_hi = if hi.is_negative() { hi * &ai.lo } else { hi * &ai.hi };
    (Iv { lo: inner_lo, hi: inner_hi }, Iv { lo: outer_lo, hi: outer_hi })
}

/// Working precision at which `a·i` (or `a⁻¹·i`) is resolved to roughly
/// its own diameter.
fn base_precision(m: &Multiplier, i: &DyadicInterval, inverse: bool) -> u64 {
    let d = (-i.diameter().magnitude_bits() + 2).max(0) as u64;
    if inverse {
        d
    } else {
        d + m.inv_bits
    }
}

/// The largest closed dyadic cell inside `a·i` (or `a⁻¹·i`) for an open
/// interval `i`.
///
/// Exact multipliers are handled exactly. For streams the cell is certified
/// when the inner and outer approximations of the image agree; otherwise the
/// guard grows until it reaches 64 bits, after which the inner answer is
/// used. That cell still lies inside the true image.
pub(crate) fn image_cell(m: &Multiplier, i: &DyadicInterval, inverse: bool) -> Result<DyadicCell> {
    if let Some(q) = m.as_rational() {
        let (p, d) = if inverse { (q.denom(), q.numer()) } else { (q.numer(), q.denom()) };
        let lo = Scaled::dyadic_times_ratio(i.lo(), p, d);
        let hi = Scaled::dyadic_times_ratio(i.hi(), p, d);
        return largest_cell(&lo, &hi).ok_or_else(|| Error::Degenerate(format!("image of {i} is empty")));
    }
    let stream = if inverse { &m.inverse } else { &m.value };
    let base = base_precision(m, i, inverse);
    let mut guard = 8;
    loop {
        let ai = stream.enclose(base + guard)?;
        let (inner, outer) = scaled_endpoints(i, &ai);
        if inner.lo < inner.hi {
            let cin = largest_cell(&Scaled::from(&inner.lo), &Scaled::from(&inner.hi));
            let cout = largest_cell(&Scaled::from(&outer.lo), &Scaled::from(&outer.hi));
            if let Some(cin) = cin {
                if Some(&cin) == cout.as_ref() || guard >= ACCEPT_GUARD {
                    return Ok(cin);
                }
            }
        }
        if guard > STREAM_PRECISION_CAP {
            return Err(Error::PrecisionExhausted { bits: base + guard, context: format!("image of {i}") });
        }
        guard *= 2;
    }
}

/// An open interval with dyadic endpoints inside `a·i` (or `a⁻¹·i` when
/// `invert`), whose diameter is within a factor `1 - 2^-20` of the true one.
pub fn scale_interval_inner(a: &Real, i: &DyadicInterval, invert: bool) -> Result<DyadicInterval> {
    let stream = if invert { a.recip() } else { a.clone() };
    let mag = stream.magnitude_bound()?;
    let base = (-i.diameter().magnitude_bits() + 8 + mag.max(0)).max(8) as u64;
    let mut guard = 0;
    loop {
        let ai = stream.enclose(base + guard)?;
        if ai.lo.is_positive() {
            let (inner, outer) = scaled_endpoints(i, &ai);
            let wi = inner.width();
            let wo = outer.width();
            if wi.is_positive() && wi.mul_pow2(20) >= &wo.mul_pow2(20) - &wo {
                return DyadicInterval::open(inner.lo, inner.hi);
            }
        }
        if guard > STREAM_PRECISION_CAP {
            return Err(Error::PrecisionExhausted { bits: base + guard, context: format!("scaling {i}") });
        }
        guard = if guard == 0 { 8 } else { guard * 2 };
    }
}

/// A closed interval of width at most `2^-n` containing `a · 0.σ`.
pub fn mul_point_enclosure(a: &Real, sigma: &BitString, n: u64) -> Result<DyadicInterval> {
    let x = Dyadic::from_bits(sigma);
    let ai = a.enclose(n + 1)?;
    let iv = Iv::point(x).mul(&ai);
    DyadicInterval::closed(iv.lo, iv.hi)
}

/// The outcome of deciding whether `a · x` lies in an open interval.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Containment {
    pub inside: bool,
    /// Precision of the enclosure of `a` that decided it.
    pub precision: u64,
}

/// Decides `a · x ∈ target` for an open `target`, escalating the precision
/// of `a` from `start` until an enclosure settles it.
pub fn certify_inside(a: &Real, x: &Dyadic, target: &DyadicInterval, start: u64) -> Result<Containment> {
    if let Some((p, q)) = a.exact_parts() {
        // a·x ∈ (lo, hi)  ⟺  lo·q < x·p < hi·q
        let v = x * &Dyadic::from_int(p.clone());
        let q = Dyadic::from_int(q.clone());
        let (lo, hi) = (target.lo() * &q, target.hi() * &q);
        let inside = if target.is_open() { lo < v && v < hi } else { lo <= v && v <= hi };
        return Ok(Containment { inside, precision: 0 });
    }
    let mut p = start.max(8);
    loop {
        let ai = a.enclose(p)?;
        let prod = Iv::point(x.clone()).mul(&ai);
        let e = DyadicInterval::closed(prod.lo.clone(), prod.hi.clone())?;
        if e.is_subset_of(target) {
            return Ok(Containment { inside: true, precision: p });
        }
        let outside = if target.is_open() {
            &prod.hi <= target.lo() || &prod.lo >= target.hi()
        } else {
            &prod.hi < target.lo() || &prod.lo > target.hi()
        };
        if outside {
            return Ok(Containment { inside: false, precision: p });
        }
        if p > start + STREAM_PRECISION_CAP {
            return Err(Error::PrecisionExhausted { bits: p, context: format!("deciding a·x ∈ {target}") });
        }
        p *= 2;
    }
}

/// The first `n` digits of the binary expansion of `a · 0.x`, for a product
/// in `[0, 1)`.
pub fn product_prefix(a: &Real, x: &BitString, n: u64) -> Result<BitString> {
    if let Some((p, q)) = a.exact_parts() {
        let num = (bigint_of(x.to_biguint()) * p) << n;
        let m = (num >> x.len()).div_floor(q);
        if m.is_negative() || m.bits() > n {
            return Err(Error::Invalid("product lies outside [0, 1)".into()));
        }
        return Ok(BitString::from_biguint(m.magnitude(), n as usize));
    }
    let prod = Real::from_dyadic(&Dyadic::from_bits(x)).mul(a);
    let (neg, m) = prod.sign_and_truncated_magnitude(n)?;
    if neg || m.bits() > n {
        return Err(Error::Invalid("product lies outside [0, 1)".into()));
    }
    Ok(BitString::from_biguint(&m, n as usize))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dyadic::{interval_of, largest_cell_in};

    fn bs(s: &str) -> BitString {
        s.parse().unwrap()
    }

    #[test]
    fn exact_image_matches_direct_search() {
        let m = Multiplier::new(Real::rational(1, 2)).unwrap();
        let i = interval_of(&bs("0101"));
        // (5/32, 6/32) → largest closed dyadic inside
        let c = image_cell(&m, &i, false).unwrap();
        let direct = largest_cell_in(&DyadicInterval::open(Dyadic::new(5, 5), Dyadic::new(6, 5)).unwrap()).unwrap();
        assert_eq!(c, direct);
        let c = image_cell(&m, &interval_of(&bs("00")), true).unwrap();
        // a⁻¹ (0, 1/4) = (0, 1/2) → [1/8, 1/4]
        assert_eq!((c.j.clone(), c.k), (1.into(), 3));
    }

    #[test]
    fn stream_image_agrees_with_exact() {
        // 3/4 as a computed stream.
        let exact = Multiplier::new(Real::rational(3, 4)).unwrap();
        let stream = Multiplier::new(Real::rational(3, 4).add(&Real::pi()).sub(&Real::pi())).unwrap();
        for s in ["1", "0110", "1101001", "0000000001"] {
            let i = interval_of(&bs(s));
            assert_eq!(image_cell(&exact, &i, false).unwrap(), image_cell(&stream, &i, false).unwrap(), "{s}");
            assert_eq!(image_cell(&exact, &i, true).unwrap(), image_cell(&stream, &i, true).unwrap(), "{s}");
        }
    }

    #[test]
    fn scaled_inner_interval() {
        let a = Real::pi().recip();
        let i = interval_of(&bs("1011"));
        let out = scale_interval_inner(&a, &i, false).unwrap();
        let lo = 11.0 / 16.0 / std::f64::consts::PI;
        assert!((out.lo().to_f64() - lo).abs() < 1e-9);
        assert!(out.lo() < out.hi());
        let back = scale_interval_inner(&a, &out, true).unwrap();
        assert!(back.is_subset_of(&i));
    }

    #[test]
    fn point_enclosure_and_containment() {
        let a = Real::rational(1, 3).cos();
        let e = mul_point_enclosure(&a, &bs("11"), 40).unwrap();
        assert!(e.diameter() <= Dyadic::new(1, 40));
        let v = 0.75 * (1.0f64 / 3.0).cos();
        assert!((e.lo().to_f64() - v).abs() < 1e-11);
        let t = DyadicInterval::open(Dyadic::new(1, 1), Dyadic::one()).unwrap();
        let c = certify_inside(&a, &Dyadic::new(3, 2), &t, 8).unwrap();
        assert!(c.inside);
        let t = DyadicInterval::open(Dyadic::zero(), Dyadic::new(1, 1)).unwrap();
        assert!(!certify_inside(&a, &Dyadic::new(3, 2), &t, 8).unwrap().inside);
    }

    #[test]
    fn prefix_of_product() {
        let p = product_prefix(&Real::rational(1, 3), &bs("11"), 8).unwrap();
        assert_eq!(p.to_string(), "01000000"); // 1/4
        let p = product_prefix(&Real::rational(2, 3), &bs("1"), 6).unwrap();
        assert_eq!(p.to_string(), "010101");
    }

    #[test]
    fn rejects_bad_multipliers() {
        assert!(Multiplier::new(Real::from_i64(0)).is_err());
        assert!(Multiplier::new(Real::rational(-1, 2)).is_err());
        assert!(Multiplier::new(Real::from_i64(2)).is_err());
        assert!(Multiplier::new(Real::from_i64(1)).is_ok());
    }
}
