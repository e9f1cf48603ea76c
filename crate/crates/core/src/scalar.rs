//! Scalar abstraction shared by the exact and the floating-point code paths.
//!
//! Everything that certifies a claim runs over [`Rational`]. The equilibrium
//! search runs the same algorithms over `f64`, where sign tests use a small
//! absolute tolerance instead of exact comparison.

use std::fmt::{Debug, Display};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, NumAssignRef, NumRef, One, Signed, ToPrimitive, Zero};

use crate::error::ParseRationalError;

/// Arbitrary-precision rational number.
pub type Rational = BigRational;

/// Numeric field element usable by the LP solver and the dominance checks.
pub trait Scalar:
    Clone + Debug + Display + PartialOrd + NumRef + NumAssignRef + Signed + Send + Sync + 'static
{
    /// `true` when arithmetic is exact and [`Scalar::tolerance`] is zero.
    const EXACT: bool;

    /// Absolute slack used by the sign predicates below.
    fn tolerance() -> Self;

    fn from_ratio(numer: i64, denom: i64) -> Self;

    fn from_rational(value: &Rational) -> Self;

    fn to_f64(&self) -> f64;

    fn from_usize(value: usize) -> Self {
        Self::from_ratio(value as i64, 1)
    }

    fn is_negligible(&self) -> bool {
        self.abs() <= Self::tolerance()
    }

    fn is_pos(&self) -> bool {
        *self > Self::tolerance()
    }

    fn is_neg(&self) -> bool {
        *self < -Self::tolerance()
    }

    /// `self >= other` up to tolerance.
    fn approx_ge(&self, other: &Self) -> bool {
        !(self.clone() - other).is_neg()
    }

    fn approx_eq(&self, other: &Self) -> bool {
        (self.clone() - other).is_negligible()
    }
}

impl Scalar for Rational {
    const EXACT: bool = true;

    fn tolerance() -> Self {
        Rational::zero()
    }

    fn from_ratio(numer: i64, denom: i64) -> Self {
        Rational::new(BigInt::from(numer), BigInt::from(denom))
    }

    fn from_rational(value: &Rational) -> Self {
        value.clone()
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn is_negligible(&self) -> bool {
        self.is_zero()
    }

    fn is_pos(&self) -> bool {
        self.is_positive()
    }

    fn is_neg(&self) -> bool {
        self.is_negative()
    }
}

impl Scalar for f64 {
    const EXACT: bool = false;

    fn tolerance() -> Self {
        1e-9
    }

    fn from_ratio(numer: i64, denom: i64) -> Self {
        numer as f64 / denom as f64
    }

    fn from_rational(value: &Rational) -> Self {
        ToPrimitive::to_f64(value).unwrap_or(f64::NAN)
    }

    fn to_f64(&self) -> f64 {
        *self
    }
}

impl Scalar for f32 {
    const EXACT: bool = false;

    fn tolerance() -> Self {
        1e-5
    }

    fn from_ratio(numer: i64, denom: i64) -> Self {
        numer as f32 / denom as f32
    }

    fn from_rational(value: &Rational) -> Self {
        ToPrimitive::to_f32(value).unwrap_or(f32::NAN)
    }

    fn to_f64(&self) -> f64 {
        *self as f64
    }
}

/// Shorthand for `numer/denom` as an exact rational.
pub fn ratio(numer: i64, denom: i64) -> Rational {
    Rational::from_ratio(numer, denom)
}

/// Parses `"a/b"` or an integer literal into a rational in lowest terms.
pub fn parse_rational(text: &str) -> Result<Rational, ParseRationalError> {
    let bad = || ParseRationalError(text.to_string());
    let (numer, denom) = match text.split_once('/') {
        Some((n, d)) => (n, d),
        None => (text, "1"),
    };
    if numer.is_empty() || denom.is_empty() || denom.starts_with(['-', '+']) {
        return Err(bad());
    }
    let numer = BigInt::from_str(numer).map_err(|_| bad())?;
    let denom = BigInt::from_str(denom).map_err(|_| bad())?;
    if denom.is_zero() {
        return Err(bad());
    }
    Ok(Rational::new(numer, denom))
}

/// Lowest-terms rendering: `"0"`, `"3"`, `"-1/2"`.
pub fn format_rational(value: &Rational) -> String {
    if value.denom().is_one() {
        value.numer().to_string()
    } else {
        format!("{}/{}", value.numer(), value.denom())
    }
}

/// Best rational approximation with denominator at most `max_denom`
/// (continued-fraction convergents, then the best semiconvergent).
pub fn best_rational(value: f64, max_denom: u64) -> Option<Rational> {
    if max_denom == 0 {
        return None;
    }
    let target = Rational::from_f64(value)?;
    let max_denom = BigInt::from(max_denom);
    let (mut p0, mut q0) = (BigInt::zero(), BigInt::one());
    let (mut p1, mut q1) = (BigInt::one(), BigInt::zero());
    let mut rest = target.clone();
    loop {
        let a = rest.floor().to_integer();
        let p2 = &a * &p1 + &p0;
        let q2 = &a * &q1 + &q0;
        if q2 > max_denom {
            let k = (&max_denom - &q0) / &q1;
            let semi = Rational::new(&k * &p1 + &p0, &k * &q1 + &q0);
            let conv = Rational::new(p1, q1);
            let closer = if (semi.clone() - &target).abs() < (conv.clone() - &target).abs() {
                semi
            } else {
                conv
            };
            return Some(closer);
        }
        p0 = std::mem::replace(&mut p1, p2);
        q0 = std::mem::replace(&mut q1, q2);
        let frac = rest.clone() - Rational::from_integer(a);
        if frac.is_zero() {
            return Some(Rational::new(p1, q1));
        }
        rest = frac.recip();
    }
}
