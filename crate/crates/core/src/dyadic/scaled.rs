use std::cmp::Ordering;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use super::{Dyadic, DyadicCell};

/// The exact rational `num / (den · 2^exp)` with `den > 0`. Endpoints of
/// images under a rational multiplier stay in this form, so comparisons
/// against dyadic candidates need only one multiplication by a small `den`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) struct Scaled {
    num: BigInt,
    den: BigInt,
    exp: u64,
}

impl From<&Dyadic> for Scaled {
    fn from(d: &Dyadic) -> Self {
        Self { num: d.numerator().clone(), den: BigInt::one(), exp: d.exponent() }
    }
}

impl Scaled {
    pub fn new(num: BigInt, den: BigInt, exp: u64) -> Self {
        assert!(!den.is_zero(), "zero denominator");
        if den.is_negative() {
            Self { num: -num, den: -den, exp }
        } else {
            Self { num, den, exp }
        }
    }

    /// `d · p / q`.
    pub fn dyadic_times_ratio(d: &Dyadic, p: &BigInt, q: &BigInt) -> Self {
        Self::new(d.numerator() * p, q.clone(), d.exponent())
    }

    /// `⌊self · 2^k⌋`.
    pub fn floor_scaled(&self, k: u64) -> BigInt {
        let t = if k >= self.exp { &self.num << (k - self.exp) } else { &self.num >> (self.exp - k) };
        t.div_floor(&self.den)
    }

    /// Compares `j / 2^k` with `self`.
    pub fn cmp_dyadic(&self, j: &BigInt, k: u64) -> Ordering {
        let e = self.exp.max(k);
        let lhs = (j * &self.den) << (e - k);
        let rhs = &self.num << (e - self.exp);
        lhs.cmp(&rhs)
    }

    /// An integer `e` close to `log2 self` for positive values (within 2).
    fn log2_hint(&self) -> i64 {
        self.num.bits() as i64 - self.den.bits() as i64 - self.exp as i64
    }

    fn minus(&self, other: &Scaled) -> Scaled {
        let e = self.exp.max(other.exp);
        let a = (&self.num * &other.den) << (e - self.exp);
        let b = (&other.num * &self.den) << (e - other.exp);
        Scaled::new(a - b, &self.den * &other.den, e)
    }
}

/// The largest closed dyadic cell inside the open interval `(lo, hi)`,
/// preferring the smallest left endpoint among cells of the largest size.
///
/// Cells of size `2^-k` exist once `2^-k ≤ (hi - lo) / 2`, so the first
/// feasible `k` lies within a few steps of `-log2 (hi - lo)`.
pub(crate) fn largest_cell(lo: &Scaled, hi: &Scaled) -> Option<DyadicCell> {
    let diff = hi.minus(lo);
    if !diff.num.is_positive() {
        return None;
    }
    let start = (-diff.log2_hint() - 2).max(0) as u64;
    for k in start..start + 8 {
        let j = lo.floor_scaled(k) + 1;
        let right = &j + 1;
        if hi.cmp_dyadic(&right, k) == Ordering::Less {
            return Some(DyadicCell { j, k });
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(n: i64, d: i64, e: u64) -> Scaled {
        Scaled::new(n.into(), d.into(), e)
    }

    #[test]
    fn rational_endpoints() {
        // (3/10, 8/10) → [1/2, 3/4]
        let c = largest_cell(&s(3, 10, 0), &s(8, 10, 0)).unwrap();
        assert_eq!((c.j, c.k), (2.into(), 2));
        // (0, 1) → [1/4, 1/2]
        let c = largest_cell(&s(0, 1, 0), &s(1, 1, 0)).unwrap();
        assert_eq!((c.j, c.k), (1.into(), 2));
        // (1/3, 2/3) → [3/8, 1/2]
        let c = largest_cell(&s(1, 3, 0), &s(2, 3, 0)).unwrap();
        assert_eq!((c.j, c.k), (3.into(), 3));
    }

    #[test]
    fn empty_interval() {
        assert!(largest_cell(&s(1, 2, 0), &s(1, 2, 0)).is_none());
        assert!(largest_cell(&s(2, 3, 0), &s(1, 3, 0)).is_none());
    }

    #[test]
    fn floor_with_den() {
        assert_eq!(s(7, 3, 1).floor_scaled(3), BigInt::from(9)); // 7/6·8 = 9.33
        assert_eq!(s(-7, 3, 1).floor_scaled(3), BigInt::from(-10));
        assert_eq!(s(7, 3, 4).floor_scaled(1), BigInt::from(0));
    }
}
