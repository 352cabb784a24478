//! Scalar backends for exact (rational) and floating-point exchange maps.

use crate::error::{Error, Result};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Num, One, Signed, ToPrimitive, Zero};
use std::fmt::Debug;
use std::str::FromStr;

/// Absolute tolerance used when comparing floating-point positions.
pub const FLOAT_TOL: f64 = 1e-12;

/// Number type an exchange map is built over.
///
/// `BigRational` gives exact arithmetic, `f64` gives speed. Comparisons that
/// decide combinatorics go through [`Coord::same`], which is exact for
/// rationals and tolerance based for floats.
pub trait Coord: Clone + Debug + PartialOrd + Num + Signed + Send + Sync + 'static {
    const EXACT: bool;

    fn from_f64(v: f64) -> Self;
    fn as_f64(&self) -> f64;
    fn floor_val(&self) -> Self;
    fn to_text(&self) -> String;
    fn parse_text(s: &str) -> Result<Self>;

    fn same_tol(&self, other: &Self, tol: f64) -> bool;

    fn same(&self, other: &Self) -> bool {
        self.same_tol(other, FLOAT_TOL)
    }

    fn is_null(&self) -> bool {
        self.same(&Self::zero())
    }

    /// Representative of `self` mod 1 in `[0, 1)`.
    fn frac(&self) -> Self {
        let r = self.clone() - self.floor_val();
        if r >= Self::one() {
            Self::zero()
        } else {
            r
        }
    }

    fn half() -> Self {
        Self::one() / (Self::one() + Self::one())
    }
}

impl Coord for f64 {
    const EXACT: bool = false;

    fn from_f64(v: f64) -> Self {
        v
    }

    fn as_f64(&self) -> f64 {
        *self
    }

    fn floor_val(&self) -> Self {
        self.floor()
    }

    fn to_text(&self) -> String {
        format!("{}", self)
    }

    fn parse_text(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.contains('/') {
            return parse_exact(s).map(|r| r.as_f64());
        }
        s.parse::<f64>()
            .map_err(|e| Error::Parse(format!("'{}': {}", s, e)))
    }

    fn same_tol(&self, other: &Self, tol: f64) -> bool {
        (self - other).abs() <= tol
    }
}

impl Coord for BigRational {
    const EXACT: bool = true;

    fn from_f64(v: f64) -> Self {
        BigRational::from_float(v).unwrap_or_else(BigRational::zero)
    }

    fn as_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn floor_val(&self) -> Self {
        self.floor()
    }

    fn to_text(&self) -> String {
        if self.denom().is_one() {
            format!("{}", self.numer())
        } else {
            format!("{}/{}", self.numer(), self.denom())
        }
    }

    fn parse_text(s: &str) -> Result<Self> {
        parse_exact(s)
    }

    fn same_tol(&self, other: &Self, _tol: f64) -> bool {
        self == other
    }
}

/// Parses `"p/q"`, an integer, or a decimal such as `"0.14"` or `"-2.5e-3"`
/// into an exact rational.
pub fn parse_exact(s: &str) -> Result<BigRational> {
    let s = s.trim();
    let bad = |why: &str| Error::Parse(format!("'{}': {}", s, why));
    if s.is_empty() {
        return Err(bad("empty number"));
    }
    if let Some((p, q)) = s.split_once('/') {
        let p = BigInt::from_str(p.trim()).map_err(|_| bad("bad numerator"))?;
        let q = BigInt::from_str(q.trim()).map_err(|_| bad("bad denominator"))?;
        if q.is_zero() {
            return Err(bad("zero denominator"));
        }
        return Ok(BigRational::new(p, q));
    }
    let (mantissa, exp) = match s.find(['e', 'E']) {
        Some(i) => (
            &s[..i],
            s[i + 1..].parse::<i32>().map_err(|_| bad("bad exponent"))?,
        ),
        None => (s, 0),
    };
    let (neg, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(bad("no digits"));
    }
    if !int_part
        .chars()
        .chain(frac_part.chars())
        .all(|c| c.is_ascii_digit())
    {
        return Err(bad("not a number"));
    }
    let all = format!("{}{}", int_part, frac_part);
    let numer = BigInt::from_str(if all.is_empty() { "0" } else { &all })
        .map_err(|_| bad("not a number"))?;
    let scale = exp - frac_part.len() as i32;
    let ten = BigInt::from(10u32);
    let mut r = BigRational::from_integer(numer);
    if scale >= 0 {
        r *= BigRational::from_integer(num_traits::pow(ten, scale as usize));
    } else {
        r /= BigRational::from_integer(num_traits::pow(ten, (-scale) as usize));
    }
    Ok(if neg { -r } else { r })
}

pub fn ratio(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// Shortest signed representative of `v` mod 1, in `(-1/2, 1/2]`.
pub fn wrap_centered(v: f64) -> f64 {
    let r = v - v.round();
    if r <= -0.5 {
        r + 1.0
    } else {
        r
    }
}

/// Distance between two points of the circle `R/Z`.
pub fn circle_dist(a: f64, b: f64) -> f64 {
    wrap_centered(a - b).abs()
}

/// `v` mod 1 in `[0, 1)` for floats.
pub fn unit(v: f64) -> f64 {
    v.frac()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decimals_parse_exactly() {
        assert_eq!(parse_exact("0.14").unwrap(), ratio(7, 50));
        assert_eq!(parse_exact("-2.5e-1").unwrap(), ratio(-1, 4));
        assert_eq!(parse_exact("3/9").unwrap(), ratio(1, 3));
        assert_eq!(parse_exact(".5").unwrap(), ratio(1, 2));
        assert_eq!(parse_exact("12").unwrap(), ratio(12, 1));
        assert!(parse_exact("1/0").is_err());
        assert!(parse_exact("abc").is_err());
        assert!(parse_exact("").is_err());
    }

    #[test]
    fn frac_stays_in_unit_interval() {
        assert_eq!((-1e-17f64).frac(), 0.0);
        assert_eq!(1.25f64.frac(), 0.25);
        assert_eq!(ratio(-1, 4).frac(), ratio(3, 4));
    }

    #[test]
    fn wrapping_is_centered() {
        assert_eq!(wrap_centered(0.75), -0.25);
        assert_eq!(wrap_centered(-0.5), 0.5);
        assert_eq!(wrap_centered(0.5), 0.5);
        assert!(circle_dist(0.999, 0.001) < 0.0021);
    }

    #[test]
    fn text_round_trip() {
        let r = ratio(-7, 50);
        assert_eq!(BigRational::parse_text(&r.to_text()).unwrap(), r);
        assert_eq!(f64::parse_text("0.1").unwrap(), 0.1);
        assert_eq!(f64::parse_text("1/4").unwrap(), 0.25);
    }
}
