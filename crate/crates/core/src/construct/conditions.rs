//! Requirements `a_i`: the multipliers a construction attends to.

use std::fmt;

use num_traits::{One, Zero};

use crate::dyadic::{Multiplier, Real};
use crate::error::{Error, Result};
use crate::geometry::{parse_rational, Angle};

/// What a stage attending this requirement does.
#[derive(Clone, Debug)]
pub enum Requirement {
    /// `a = 0`: every product is 0, nothing to code.
    Skip,
    Attend(Multiplier),
}

/// A parsed multiplier together with the text it came from.
#[derive(Clone)]
pub struct Condition {
    pub spec: String,
    pub value: Real,
    pub requirement: Requirement,
}

impl fmt::Debug for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Condition({} ≈ {:.9})", self.spec, self.value.approx_f64())
    }
}

impl Condition {
    /// A condition for the value `a ∈ [0, 1]`.
    pub fn from_real(spec: impl Into<String>, value: Real) -> Result<Self> {
        let spec = spec.into();
        let requirement = match value.as_rational() {
            Some(q) if q.is_zero() => Requirement::Skip,
            Some(q) if q.numer() < &num_bigint::BigInt::zero() || q > &num_rational::BigRational::one() => {
                return Err(Error::InvalidMultiplier(format!("`{spec}` is outside [0, 1]")))
            }
            _ => Requirement::Attend(Multiplier::new(value.clone())?),
        };
        Ok(Self { spec, value, requirement })
    }

    pub fn multiplier(&self) -> Option<&Multiplier> {
        match &self.requirement {
            Requirement::Skip => None,
            Requirement::Attend(m) => Some(m),
        }
    }

    /// Parses one condition spec into one or more conditions.
    ///
    /// * `p/q`, `j/2^k`, `0.375`: the rational itself.
    /// * `cos(X)`: `|cos X|` for an angle `X` such as `1/3 pi` or `0.7`.
    /// * `proj(φ, θ)`: the pair `|cos(φ − θ)|`, `|cos(φ + π/2 − θ)|`, the
    ///   scale factors of projecting the directions `φ` and `φ + π/2` onto
    ///   the line at angle `θ`.
    pub fn parse(spec: &str) -> Result<Vec<Condition>> {
        let s = spec.trim();
        if let Some(inner) = call_args(s, "cos") {
            let x: Angle = inner.parse()?;
            return Ok(vec![Condition::from_real(s, x.cos().abs())?]);
        }
        if let Some(inner) = call_args(s, "proj") {
            let (phi, theta) = inner
                .split_once(',')
                .ok_or_else(|| Error::Parse(format!("`{s}`: proj takes two angles")))?;
            let phi: Angle = phi.parse()?;
            let theta: Angle = theta.parse()?;
            let a = phi.sub(&theta).cos().abs();
            let b = phi.add(&Angle::pi_times(1, 2)).sub(&theta).cos().abs();
            return Ok(vec![
                Condition::from_real(format!("{s}[0]"), a)?,
                Condition::from_real(format!("{s}[1]"), b)?,
            ]);
        }
        Ok(vec![Condition::from_real(s, Real::from_rational(parse_rational(s)?))?])
    }

    pub fn parse_all<S: AsRef<str>>(specs: &[S]) -> Result<Vec<Condition>> {
        let mut out = Vec::new();
        for s in specs {
            out.extend(Condition::parse(s.as_ref())?);
        }
        if out.is_empty() {
            return Err(Error::Invalid("at least one condition is required".into()));
        }
        Ok(out)
    }
}

fn call_args<'a>(s: &'a str, name: &str) -> Option<&'a str> {
    s.strip_prefix(name)?.trim_start().strip_prefix('(')?.strip_suffix(')')
}
