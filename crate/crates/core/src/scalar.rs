use std::fmt::{Debug, Display};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, Num, One, Signed, ToPrimitive, Zero};

use crate::error::ZhangError;

/// Exact rational type used by the geometry engine.
pub type Rational = BigRational;

/// Numeric field the dynamics can run over: `f32`, `f64` or exact rationals.
pub trait Scalar:
    Num + Signed + PartialOrd + Clone + Debug + Display + Send + Sync + 'static
{
    /// True when arithmetic is exact.
    const EXACT: bool;

    fn from_rational(r: &Rational) -> Self;
    fn to_f64(&self) -> f64;

    fn from_int(v: i64) -> Self {
        Self::from_rational(&Rational::from_integer(BigInt::from(v)))
    }

    /// Magnitude below which a value counts as zero in pivoting decisions.
    fn pivot_tolerance() -> Self;
}

impl Scalar for f64 {
    const EXACT: bool = false;
    fn from_rational(r: &Rational) -> Self {
        rational_to_f64(r)
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn pivot_tolerance() -> Self {
        1e-300
    }
}

impl Scalar for f32 {
    const EXACT: bool = false;
    fn from_rational(r: &Rational) -> Self {
        rational_to_f64(r) as f32
    }
    fn to_f64(&self) -> f64 {
        *self as f64
    }
    fn pivot_tolerance() -> Self {
        1e-37
    }
}

impl Scalar for BigRational {
    const EXACT: bool = true;
    fn from_rational(r: &Rational) -> Self {
        r.clone()
    }
    fn to_f64(&self) -> f64 {
        rational_to_f64(self)
    }
    fn pivot_tolerance() -> Self {
        BigRational::zero()
    }
}

/// Nearest `f64` to a rational, robust for huge numerators and denominators.
pub fn rational_to_f64(r: &Rational) -> f64 {
    if let Some(v) = num_traits::ToPrimitive::to_f64(r) {
        if v.is_finite() {
            return v;
        }
    }
    let n = r.numer();
    let d = r.denom();
    let shift = n.bits() as i64 - d.bits() as i64;
    // scale both to ~60 significant bits before dividing
    let (nn, dd) = if shift > 0 {
        (n.clone(), d.clone() << (shift as usize))
    } else {
        (n.clone() << ((-shift) as usize), d.clone())
    };
    let q = num_traits::ToPrimitive::to_f64(&BigRational::new(nn, dd)).unwrap_or(0.0);
    q * 2f64.powi(shift as i32)
}

/// Exact conversion of a finite `f64` into a rational.
pub fn f64_to_rational(v: f64) -> Rational {
    BigRational::from_float(v).unwrap_or_else(BigRational::zero)
}

/// Parses `"p/q"`, an integer, or a decimal such as `"0.05"` or `"1e-3"` exactly.
pub fn parse_rational(s: &str) -> Result<Rational, ZhangError> {
    let t = s.trim();
    let bad = || ZhangError::Parse(format!("malformed rational `{s}`"));
    if t.is_empty() {
        return Err(bad());
    }
    if let Some((p, q)) = t.split_once('/') {
        let p = BigInt::from_str(p.trim()).map_err(|_| bad())?;
        let q = BigInt::from_str(q.trim()).map_err(|_| bad())?;
        if q.is_zero() {
            return Err(ZhangError::Parse(format!("zero denominator in `{s}`")));
        }
        return Ok(BigRational::new(p, q));
    }
    let (mantissa, exp) = match t.find(['e', 'E']) {
        Some(k) => (&t[..k], t[k + 1..].parse::<i32>().map_err(|_| bad())?),
        None => (t, 0),
    };
    let (neg, body) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = body.split_once('.').unwrap_or((body, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(bad());
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let digits = format!("{int_part}{frac_part}");
    let num = BigInt::from_str(if digits.is_empty() { "0" } else { &digits }).map_err(|_| bad())?;
    let scale = exp - frac_part.len() as i32;
    let ten = BigInt::from(10u8);
    let mut r = BigRational::from_integer(num);
    if scale >= 0 {
        r *= BigRational::from_integer(num_traits::pow(ten, scale as usize));
    } else {
        r /= BigRational::from_integer(num_traits::pow(ten, (-scale) as usize));
    }
    Ok(if neg { -r } else { r })
}

/// Canonical `"p/q"` (or `"p"`) rendering.
pub fn format_rational(r: &Rational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

pub fn rat(p: i64, q: i64) -> Rational {
    BigRational::new(BigInt::from(p), BigInt::from(q))
}

pub fn rat_int(p: i64) -> Rational {
    BigRational::from_integer(BigInt::from(p))
}

pub fn rat_from_usize(p: usize) -> Rational {
    BigRational::from_integer(BigInt::from_usize(p).expect("usize fits BigInt"))
}

/// Floor of a rational as `i64` (saturating).
pub fn rational_floor_i64(r: &Rational) -> i64 {
    r.floor().to_integer().to_i64().unwrap_or(if r.is_negative() { i64::MIN } else { i64::MAX })
}

/// Ceiling of a rational as `i64` (saturating).
pub fn rational_ceil_i64(r: &Rational) -> i64 {
    r.ceil().to_integer().to_i64().unwrap_or(if r.is_negative() { i64::MIN } else { i64::MAX })
}

/// Formats a float with 17 significant digits, the serialization convention for all outputs.
pub fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        return "NaN".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return "0".into();
    }
    format!("{:.*e}", 16, v)
}
