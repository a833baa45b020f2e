//! Polar and Cartesian coordinates with certified error, projections onto
//! lines through the origin, and counting dyadic points in small balls.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::Serialize;

use crate::dyadic::{Dyadic, Openness, Real};
use crate::error::{Error, Result};

/// Parses `p/q`, `j/2^k`, an integer, or a finite decimal such as `0.375`.
pub fn parse_rational(s: &str) -> Result<BigRational> {
    let s = s.trim();
    let bad = || Error::Parse(format!("invalid rational `{s}`"));
    if let Some((p, q)) = s.split_once('/') {
        let p: BigInt = p.trim().parse().map_err(|_| bad())?;
        let q = q.trim();
        let q: BigInt = match q.strip_prefix("2^") {
            Some(k) => BigInt::one() << k.parse::<u32>().map_err(|_| bad())?,
            None => q.parse().map_err(|_| bad())?,
        };
        if q.is_zero() {
            return Err(bad());
        }
        return Ok(BigRational::new(p, q));
    }
    if let Some((int, frac)) = s.split_once('.') {
        if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let neg = int.starts_with('-');
        let int: BigInt = match int.trim_start_matches(['-', '+']) {
            "" => BigInt::zero(),
            i => i.parse().map_err(|_| bad())?,
        };
        let scale = BigInt::from(10).pow(frac.len() as u32);
        let frac: BigInt = frac.parse().map_err(|_| bad())?;
        let v = BigRational::new(int * &scale + frac, scale);
        return Ok(if neg { -v } else { v });
    }
    Ok(BigRational::from_integer(s.parse().map_err(|_| bad())?))
}

/// An angle, either an exact rational multiple of `π` or a real stream in radians.
#[derive(Clone)]
pub enum Angle {
    PiMultiple(BigRational),
    Radians(Real),
}

impl Angle {
    /// `p/q · π`.
    pub fn pi_times(p: i64, q: i64) -> Self {
        Angle::PiMultiple(BigRational::new(p.into(), q.into()))
    }

    pub fn to_real(&self) -> Real {
        match self {
            Angle::PiMultiple(q) if q.is_zero() => Real::from_i64(0),
            Angle::PiMultiple(q) => Real::pi().mul_rational(q),
            Angle::Radians(r) => r.clone(),
        }
    }

    pub fn add(&self, other: &Angle) -> Angle {
        match (self, other) {
            (Angle::PiMultiple(a), Angle::PiMultiple(b)) => Angle::PiMultiple(a + b),
            _ => Angle::Radians(self.to_real().add(&other.to_real())),
        }
    }

    pub fn sub(&self, other: &Angle) -> Angle {
        match (self, other) {
            (Angle::PiMultiple(a), Angle::PiMultiple(b)) => Angle::PiMultiple(a - b),
            _ => Angle::Radians(self.to_real().sub(&other.to_real())),
        }
    }

    /// `cos` of the angle; exact whenever the value is rational, which for a
    /// rational multiple of `π` means one of `0, ±1/2, ±1`.
    pub fn cos(&self) -> Real {
        match self {
            Angle::PiMultiple(q) => {
                let two = BigRational::from_integer(2.into());
                let r = q - (q / &two).floor() * &two;
                let six = &r * BigRational::from_integer(6.into());
                if six.is_integer() {
                    let v = match six.to_integer().to_string().as_str() {
                        "0" => Some((1, 1)),
                        "2" | "10" => Some((1, 2)),
                        "3" | "9" => Some((0, 1)),
                        "4" | "8" => Some((-1, 2)),
                        "6" => Some((-1, 1)),
                        _ => None,
                    };
                    if let Some((p, d)) = v {
                        return Real::rational(p, d);
                    }
                }
                self.to_real().cos()
            }
            Angle::Radians(r) => r.cos(),
        }
    }
}

impl fmt::Debug for Angle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Angle::PiMultiple(q) => write!(f, "{q}·π"),
            Angle::Radians(r) => write!(f, "{:.6} rad", r.approx_f64()),
        }
    }
}

impl FromStr for Angle {
    type Err = Error;

    /// `pi`, `p/q pi`, `p/q*pi` or `p/qpi` give exact multiples of `π`; a
    /// bare rational is in radians.
    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        match t.strip_suffix("pi").or_else(|| t.strip_suffix('π')) {
            Some(coef) => {
                let coef = coef.trim().trim_end_matches(['*', '·']).trim();
                let q = if coef.is_empty() { BigRational::one() } else { parse_rational(coef)? };
                Ok(Angle::PiMultiple(q))
            }
            None => Ok(Angle::Radians(Real::from_rational(parse_rational(t)?))),
        }
    }
}

/// A point `(r cos θ, r sin θ)` with `r ∈ [0, 1]` and `θ ∈ [0, π]`.
#[derive(Clone, Debug)]
pub struct PolarPoint {
    pub r: Real,
    pub theta: Angle,
}

/// A closed Euclidean ball with dyadic center and radius.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ErrorBall {
    pub center: (Dyadic, Dyadic),
    pub radius: Dyadic,
}

impl ErrorBall {
    /// Whether `(x, y)` certifiably lies in the ball, deciding with
    /// enclosures of precision up to `max_precision`.
    pub fn certify_contains(&self, x: &Real, y: &Real, max_precision: u64) -> Result<bool> {
        let dx = x.sub(&Real::from_dyadic(&self.center.0));
        let dy = y.sub(&Real::from_dyadic(&self.center.1));
        let d2 = dx.mul(&dx).add(&dy.mul(&dy));
        let r2 = &self.radius * &self.radius;
        let mut n = 16;
        while n <= max_precision {
            let iv = d2.query(n)?;
            if iv.hi() <= &r2 {
                return Ok(true);
            }
            if iv.lo() > &r2 {
                return Ok(false);
            }
            n *= 2;
        }
        Ok(false)
    }
}

/// An upper bound for `1 + √2` as a dyadic with 62 fractional bits.
fn one_plus_sqrt2_upper() -> Dyadic {
    let s = Real::from_i64(2).sqrt().query(62).expect("√2 has certified enclosures");
    &Dyadic::one() + s.hi()
}

/// A dyadic with at most `s + 1` fractional bits within `2^-s` of the
/// value, the binary truncation whenever the stream can decide it.
fn approx_within(v: &Real, s: u64) -> Result<Dyadic> {
    match v.sign_and_truncated_magnitude(s) {
        Ok((neg, m)) => {
            let d = Dyadic::new(BigInt::from(m), s);
            Ok(if neg { -d } else { d })
        }
        Err(Error::UndeterminedBits { .. }) => Ok(v.query(s + 1)?.lo().round_down(s + 1)),
        Err(e) => Err(e),
    }
}

/// Rounds to the nearest multiple of `2^-(s+1)`, within `2^-(s+1)`.
fn round_near(v: &Real, s: u64) -> Result<Dyadic> {
    let iv = v.query(s + 3)?;
    let mid = (iv.lo() + iv.hi()).mul_pow2(-1);
    let down = mid.round_down(s + 1);
    let half = Dyadic::new(1, s + 2);
    Ok(if &mid - &down >= half { down + Dyadic::new(1, s + 1) } else { down })
}

/// `(x[s], y[s])` from the approximations `r[s]`, `θ[s]`, together with a
/// ball of radius at least `2^-s(1 + √2)` around it that contains the exact
/// point `(r cos θ, r sin θ)`.
///
/// The map `(r, θ) ↦ (r cos θ, r sin θ)` has Jacobian singular values `1`
/// and `r`, so it is 1-Lipschitz for `r ≤ 1`; input error `√2·2^-s` and
/// output rounding below `2^-s` give the radius.
pub fn cart_of_polar(p: &PolarPoint, s: u64) -> Result<ErrorBall> {
    if s == 0 {
        return Err(Error::Invalid("cart_of_polar needs s ≥ 1".into()));
    }
    let radius = one_plus_sqrt2_upper().mul_pow2(-(s as i64));
    if p.r.as_rational().is_some_and(|q| q.is_zero()) {
        return Ok(ErrorBall { center: (Dyadic::zero(), Dyadic::zero()), radius });
    }
    let rs = Real::from_dyadic(&approx_within(&p.r, s)?);
    let ts = Angle::Radians(Real::from_dyadic(&approx_within(&p.theta.to_real(), s)?));
    let x = rs.mul(&ts.cos());
    let y = rs.mul(&ts.sub(&Angle::pi_times(1, 2)).cos());
    Ok(ErrorBall { center: (round_near(&x, s)?, round_near(&y, s)?), radius })
}

/// Inverse of the polar map on the closed upper half plane: `r = |(x, y)|`
/// and `θ ∈ [0, π]`. Points on the first axis map to `(x, 0)`.
pub fn polar_of_cart(x: &Real, y: &Real) -> Result<(Real, Angle)> {
    use std::cmp::Ordering::*;
    let y_sign = y.certified_sign(1024)?;
    let x_sign = x.certified_sign(1024)?;
    match (y_sign, x_sign) {
        (Some(Equal), Some(Greater | Equal)) => Ok((x.clone(), Angle::PiMultiple(BigRational::zero()))),
        (Some(Equal), Some(Less)) => Ok((x.neg(), Angle::pi_times(1, 1))),
        (Some(Greater), _) => {
            let r = x.mul(x).add(&y.mul(y)).sqrt();
            let t = Angle::pi_times(1, 2).sub(&Angle::Radians(x.mul(&y.recip()).atan()));
            Ok((r, t))
        }
        (Some(Less), _) => Err(Error::Invalid("point lies below the first axis".into())),
        _ => Err(Error::PrecisionExhausted { bits: 1024, context: "sign of a Cartesian coordinate".into() }),
    }
}

/// An upper bound for the Lipschitz constant of `polar_of_cart` on the
/// ball, `max(1, 1/ρ)` where `ρ` bounds the distance from the ball to the
/// origin from below.
pub fn polar_lipschitz(ball: &ErrorBall) -> Result<Dyadic> {
    let (cx, cy) = &ball.center;
    let norm = Real::from_dyadic(&(&(cx * cx) + &(cy * cy))).sqrt().query(64)?;
    let gap = norm.lo() - &ball.radius;
    if !gap.is_positive() {
        return Err(Error::Degenerate("ball meets the origin".into()));
    }
    let inv = Real::from_rational(gap.to_rational().recip()).query(32)?;
    Ok(Dyadic::max(&Dyadic::one(), inv.hi()))
}

/// `|proj_θ(s, ρ)| = s |cos(θ − ρ)|`.
pub fn projection_length(s: &Real, rho: &Angle, theta: &Angle) -> Real {
    s.mul(&theta.sub(rho).cos().abs())
}

/// The signed projection `p*`: `+s|cos(θ − ρ)|` when `|θ − ρ| ≤ π/2` and
/// `−s|cos(θ − ρ)|` otherwise. For `ρ ∈ [0, π/2]`, `θ ∈ [0, π]` this is
/// `s cos(θ − ρ)`, which is `+0` on the boundary.
pub fn signed_projection(s: &Real, rho: &Angle, theta: &Angle) -> Real {
    s.mul(&theta.sub(rho).cos())
}

/// `⌊(4(1 + √2))²⌋`.
pub const BALL_COUNT_BOUND: u64 = 93;

/// Number of points `2^-r z`, `z ∈ ℤ²`, in the open ball of radius
/// `2^-r(1 + √2)` about `a`.
pub fn count_dyadics_in_ball(a: &(Dyadic, Dyadic), r: u64) -> u64 {
    let c = (a.0.mul_pow2(r as i64), a.1.mul_pow2(r as i64));
    let three = Dyadic::from_int(3);
    let eight = Dyadic::from_int(8);
    // d² < (1 + √2)² = 3 + 2√2  ⟺  d² < 3  or  (d² − 3)² < 8
    grid_points(&c, 3, |d2| *d2 < three || { let e = d2 - &three; &e * &e < eight })
}

/// Number of points `2^-r z` within `radius` of `a`, counting the boundary
/// when `openness` is closed.
pub fn count_dyadics_within(a: &(Dyadic, Dyadic), r: u64, radius: &Dyadic, openness: Openness) -> u64 {
    let c = (a.0.mul_pow2(r as i64), a.1.mul_pow2(r as i64));
    let rr = radius.mul_pow2(r as i64);
    let r2 = &rr * &rr;
    let reach = rr.ceil_scaled(0).magnitude().iter_u64_digits().next().unwrap_or(0) + 1;
    grid_points(&c, reach, |d2| match openness {
        Openness::Open => *d2 < r2,
        Openness::Closed => *d2 <= r2,
    })
}

fn grid_points(c: &(Dyadic, Dyadic), reach: u64, inside: impl Fn(&Dyadic) -> bool) -> u64 {
    let reach = BigInt::from(reach);
    let (x0, x1) = (c.0.floor_scaled(0) - &reach, c.0.floor_scaled(0) + &reach + 1);
    let (y0, y1) = (c.1.floor_scaled(0) - &reach, c.1.floor_scaled(0) + &reach + 1);
    let mut count = 0;
    let mut zx = x0;
    while zx <= x1 {
        let dx = &Dyadic::from_int(zx.clone()) - &c.0;
        let dx2 = &dx * &dx;
        let mut zy = y0.clone();
        while zy <= y1 {
            let dy = &Dyadic::from_int(zy.clone()) - &c.1;
            if inside(&(&dx2 + &(&dy * &dy))) {
                count += 1;
            }
            zy += 1;
        }
        zx += 1;
    }
    count
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f(r: &Real) -> f64 {
        r.approx_f64()
    }

    #[test]
    fn niven_values() {
        for (a, v) in [("0 pi", 1.0), ("1/3 pi", 0.5), ("1/2pi", 0.0), ("2/3*pi", -0.5), ("pi", -1.0), ("5/3 pi", 0.5), ("-1/3 pi", 0.5), ("7/3 pi", 0.5)] {
            let c = a.parse::<Angle>().unwrap().cos();
            assert!(c.is_exact(), "{a}");
            assert_eq!(f(&c), v, "{a}");
        }
        let c = "1/4 pi".parse::<Angle>().unwrap().cos();
        assert!(!c.is_exact());
        assert!((f(&c) - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
    }

    #[test]
    fn rationals() {
        assert_eq!(parse_rational("3/2^4").unwrap(), BigRational::new(3.into(), 16.into()));
        assert_eq!(parse_rational("0.375").unwrap(), BigRational::new(3.into(), 8.into()));
        assert_eq!(parse_rational("-.5").unwrap(), BigRational::new((-1).into(), 2.into()));
        assert_eq!(parse_rational("7").unwrap(), BigRational::from_integer(7.into()));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("x").is_err());
    }

    #[test]
    fn axis_and_origin() {
        let p = PolarPoint { r: Real::from_i64(1), theta: Angle::pi_times(0, 1) };
        let b = cart_of_polar(&p, 10).unwrap();
        assert_eq!(b.center, (Dyadic::one(), Dyadic::zero()));
        assert!(b.radius.to_f64() >= (1.0 + 2f64.sqrt()) / 1024.0);
        let o = PolarPoint { r: Real::from_i64(0), theta: Angle::pi_times(1, 7) };
        assert_eq!(cart_of_polar(&o, 8).unwrap().center, (Dyadic::zero(), Dyadic::zero()));
    }

    #[test]
    fn third_of_pi() {
        let p = PolarPoint { r: Real::rational(1, 2), theta: Angle::pi_times(1, 3) };
        let b = cart_of_polar(&p, 16).unwrap();
        assert!((b.center.0.to_f64() - 0.25).abs() <= b.radius.to_f64());
        let x = Real::rational(1, 4);
        let y = Real::from_i64(3).sqrt().mul_rational(&BigRational::new(1.into(), 4.into()));
        assert!(b.certify_contains(&x, &y, 256).unwrap());
    }

    #[test]
    fn projections() {
        let one = Real::from_i64(1);
        let zero = Angle::pi_times(0, 1);
        assert_eq!(f(&projection_length(&one, &zero, &Angle::pi_times(1, 3))), 0.5);
        assert_eq!(f(&projection_length(&Real::rational(3, 4), &Angle::pi_times(1, 5), &Angle::pi_times(1, 5))), 0.75);
        assert_eq!(f(&projection_length(&one, &zero, &Angle::pi_times(1, 2))), 0.0);
        let c = std::f64::consts::FRAC_1_SQRT_2;
        assert!((f(&signed_projection(&one, &zero, &Angle::pi_times(1, 4))) - c).abs() < 1e-15);
        assert!((f(&signed_projection(&one, &zero, &Angle::pi_times(3, 4))) + c).abs() < 1e-15);
    }

    #[test]
    fn counts() {
        let o = (Dyadic::zero(), Dyadic::zero());
        // (±2, ±1), (±1, ±2) and the 3×3 block plus (±2, 0), (0, ±2)
        assert_eq!(count_dyadics_in_ball(&o, 5), 21);
        let h = (Dyadic::new(1, 1), Dyadic::new(1, 1));
        assert!(count_dyadics_in_ball(&h, 4) <= BALL_COUNT_BOUND);
        assert_eq!(count_dyadics_within(&o, 3, &Dyadic::zero(), Openness::Closed), 1);
        assert_eq!(count_dyadics_within(&o, 3, &Dyadic::zero(), Openness::Open), 0);
        let off = (Dyadic::new(1, 5), Dyadic::zero());
        assert_eq!(count_dyadics_within(&off, 3, &Dyadic::zero(), Openness::Closed), 0);
    }

    #[test]
    fn inverse_map() {
        let (r, t) = polar_of_cart(&Real::rational(3, 5), &Real::from_i64(0)).unwrap();
        assert!(r.is_exact() && matches!(t, Angle::PiMultiple(ref q) if q.is_zero()));
        let (r, t) = polar_of_cart(&Real::rational(-3, 10), &Real::rational(2, 5)).unwrap();
        assert!((f(&r) - 0.5).abs() < 1e-15);
        assert!((f(&t.to_real()) - (0.4f64).atan2(-0.3)).abs() < 1e-14);
        let ball = ErrorBall { center: (Dyadic::new(1, 1), Dyadic::zero()), radius: Dyadic::new(1, 2) };
        assert_eq!(polar_lipschitz(&ball).unwrap(), Dyadic::from_int(4));
        let far = ErrorBall { center: (Dyadic::from_int(4), Dyadic::zero()), radius: Dyadic::one() };
        assert_eq!(polar_lipschitz(&far).unwrap(), Dyadic::one());
        let bad = ErrorBall { center: (Dyadic::new(1, 2), Dyadic::zero()), radius: Dyadic::new(1, 1) };
        assert!(polar_lipschitz(&bad).is_err());
    }
}
