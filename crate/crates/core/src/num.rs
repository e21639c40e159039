//! Exact-or-float scalars.
//!
//! Stability data (weights, shifts, combined charge coefficients) is kept as
//! exact rationals whenever it can be; once an irrational phase enters, values
//! degrade to `f64` and every sign test switches to a fixed tolerance.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub type Rational = BigRational;

/// Absolute tolerance used by every floating-point sign test.
pub const NUMERIC_TOL: f64 = 1e-9;

pub fn int(v: i64) -> Rational {
    Rational::from_integer(BigInt::from(v))
}

pub fn rat(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

/// Correctly rounded, so decimal strings of doubles parse back bit-for-bit.
pub fn rat_to_f64(q: &Rational) -> f64 {
    q.to_f64().unwrap_or(0.0)
}

/// Exact conversion of a finite float to a rational.
pub fn f64_to_rat(x: f64) -> Rational {
    Rational::from_float(x).unwrap_or_else(Rational::zero)
}

/// Parses "3", "-1/2", "0.25", "1e-3" into an exact rational.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let t = s.trim();
    if t.is_empty() {
        return Err(Error::Parse("empty rational".into()));
    }
    if let Some((n, d)) = t.split_once('/') {
        let n = parse_rational(n)?;
        let d = parse_rational(d)?;
        if d.is_zero() {
            return Err(Error::Parse(format!("zero denominator in {s:?}")));
        }
        return Ok(n / d);
    }
    let (mantissa, exponent) = match t.find(['e', 'E']) {
        Some(pos) => {
            let e: i32 = t[pos + 1..]
                .parse()
                .map_err(|_| Error::Parse(format!("bad exponent in {s:?}")))?;
            (&t[..pos], e)
        }
        None => (t, 0),
    };
    let (neg, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(Error::Parse(format!("not a number: {s:?}")));
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return Err(Error::Parse(format!("not a number: {s:?}")));
    }
    let all: String = format!("{int_part}{frac_part}");
    let numer = BigInt::from_str(if all.is_empty() { "0" } else { &all })
        .map_err(|_| Error::Parse(format!("not a number: {s:?}")))?;
    let scale = exponent - frac_part.len() as i32;
    let ten = BigInt::from(10);
    let mut q = if scale >= 0 {
        Rational::from_integer(numer * num_traits::pow(ten, scale as usize))
    } else {
        Rational::new(numer, num_traits::pow(ten, (-scale) as usize))
    };
    if neg {
        q = -q;
    }
    Ok(q)
}

pub fn format_rational(q: &Rational) -> String {
    if q.is_integer() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

/// Serde adapter writing a rational as its "p/q" string.
pub mod rational_str {
    use super::{format_rational, parse_rational, Rational};
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(q: &Rational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format_rational(q))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        let s = String::deserialize(d)?;
        parse_rational(&s).map_err(crate::error::de_error)
    }
}

/// A real number that is exact until something irrational touches it.
#[derive(Clone, Debug, PartialEq)]
pub enum Real {
    Exact(Rational),
    Float(f64),
}

impl Real {
    pub fn zero() -> Self {
        Real::Exact(Rational::zero())
    }

    pub fn from_i64(v: i64) -> Self {
        Real::Exact(int(v))
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Real::Exact(_))
    }

    pub fn as_exact(&self) -> Option<&Rational> {
        match self {
            Real::Exact(q) => Some(q),
            Real::Float(_) => None,
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Real::Exact(q) => rat_to_f64(q),
            Real::Float(x) => *x,
        }
    }

    fn is_exact_zero(&self) -> bool {
        matches!(self, Real::Exact(q) if q.is_zero())
    }

    /// Sign, exact for rationals and within [`NUMERIC_TOL`] for floats.
    pub fn sign(&self) -> Ordering {
        match self {
            Real::Exact(q) => q.cmp(&Rational::zero()),
            Real::Float(x) => float_sign(*x),
        }
    }

    /// Equality: exact when both sides are exact, otherwise within `tol`.
    pub fn approx_eq(&self, other: &Real, tol: f64) -> bool {
        match (self, other) {
            (Real::Exact(a), Real::Exact(b)) => a == b,
            _ => (self.to_f64() - other.to_f64()).abs() <= tol,
        }
    }
}

pub(crate) fn float_sign(x: f64) -> Ordering {
    if x > NUMERIC_TOL {
        Ordering::Greater
    } else if x < -NUMERIC_TOL {
        Ordering::Less
    } else {
        Ordering::Equal
    }
}

impl From<Rational> for Real {
    fn from(q: Rational) -> Self {
        Real::Exact(q)
    }
}

impl From<f64> for Real {
    fn from(x: f64) -> Self {
        Real::Float(x)
    }
}

impl fmt::Display for Real {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Real::Exact(q) => f.write_str(&format_rational(q)),
            Real::Float(x) => write!(f, "{x}"),
        }
    }
}

impl Serialize for Real {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Real::Exact(q) => s.serialize_str(&format_rational(q)),
            Real::Float(x) => s.serialize_f64(*x),
        }
    }
}

impl<'de> Deserialize<'de> for Real {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Text(String),
            Number(f64),
        }
        match Repr::deserialize(d)? {
            Repr::Text(s) => parse_rational(&s)
                .map(Real::Exact)
                .map_err(crate::error::de_error),
            Repr::Number(x) => Ok(Real::Float(x)),
        }
    }
}

macro_rules! real_binop {
    ($trait:ident, $method:ident, $exact:expr, $float:expr, $zero_short:expr) => {
        impl<'a> $trait<&'a Real> for &'a Real {
            type Output = Real;
            fn $method(self, rhs: &'a Real) -> Real {
                #[allow(clippy::redundant_closure_call)]
                if $zero_short && (self.is_exact_zero() || rhs.is_exact_zero()) {
                    return Real::zero();
                }
                match (self, rhs) {
                    (Real::Exact(a), Real::Exact(b)) => Real::Exact($exact(a, b)),
                    _ => Real::Float($float(self.to_f64(), rhs.to_f64())),
                }
            }
        }
        impl $trait for Real {
            type Output = Real;
            fn $method(self, rhs: Real) -> Real {
                (&self).$method(&rhs)
            }
        }
    };
}

real_binop!(Add, add, |a: &Rational, b: &Rational| a + b, |a: f64, b: f64| a + b, false);
real_binop!(Sub, sub, |a: &Rational, b: &Rational| a - b, |a: f64, b: f64| a - b, false);
real_binop!(Mul, mul, |a: &Rational, b: &Rational| a * b, |a: f64, b: f64| a * b, true);

impl Neg for Real {
    type Output = Real;
    fn neg(self) -> Real {
        match self {
            Real::Exact(q) => Real::Exact(-q),
            Real::Float(x) => Real::Float(-x),
        }
    }
}

impl Neg for &Real {
    type Output = Real;
    fn neg(self) -> Real {
        -self.clone()
    }
}

/// Complex number with [`Real`] parts; exact when both parts are.
#[derive(Clone, Debug, PartialEq)]
pub struct CValue {
    pub re: Real,
    pub im: Real,
}

impl CValue {
    pub fn new(re: Real, im: Real) -> Self {
        CValue { re, im }
    }

    pub fn zero() -> Self {
        CValue::new(Real::zero(), Real::zero())
    }

    pub fn exact(re: Rational, im: Rational) -> Self {
        CValue::new(Real::Exact(re), Real::Exact(im))
    }

    pub fn from_complex(z: Complex64) -> Self {
        CValue::new(Real::Float(z.re), Real::Float(z.im))
    }

    pub fn i() -> Self {
        CValue::exact(Rational::zero(), Rational::one())
    }

    pub fn is_exact(&self) -> bool {
        self.re.is_exact() && self.im.is_exact()
    }

    pub fn is_exact_zero(&self) -> bool {
        self.re.is_exact_zero() && self.im.is_exact_zero()
    }

    pub fn to_complex(&self) -> Complex64 {
        Complex64::new(self.re.to_f64(), self.im.to_f64())
    }

    pub fn scale(&self, t: &Real) -> CValue {
        CValue::new(&self.re * t, &self.im * t)
    }

    pub fn approx_eq(&self, other: &CValue, tol: f64) -> bool {
        self.re.approx_eq(&other.re, tol) && self.im.approx_eq(&other.im, tol)
    }

    /// Parses "a+bi", "a-bi", "bi", "-i", "a" with rational or decimal parts.
    pub fn parse(s: &str) -> Result<CValue> {
        let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        if t.is_empty() {
            return Err(Error::Parse("empty complex number".into()));
        }
        let Some(body) = t.strip_suffix('i') else {
            return Ok(CValue::exact(parse_rational(&t)?, Rational::zero()));
        };
        // Split at the last sign that is not the leading one and not an exponent sign.
        let bytes = body.as_bytes();
        let mut split = None;
        for idx in (1..bytes.len()).rev() {
            if (bytes[idx] == b'+' || bytes[idx] == b'-')
                && !matches!(bytes[idx - 1], b'e' | b'E' | b'/')
            {
                split = Some(idx);
                break;
            }
        }
        let (re_txt, im_txt) = match split {
            Some(idx) => (&body[..idx], &body[idx..]),
            None => ("0", body),
        };
        let im = match im_txt {
            "" | "+" => Rational::one(),
            "-" => -Rational::one(),
            other => parse_rational(other)?,
        };
        Ok(CValue::exact(parse_rational(re_txt)?, im))
    }
}

impl fmt::Display for CValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (&self.re, &self.im) {
            (Real::Exact(a), Real::Exact(b)) => {
                if b.is_negative() {
                    write!(f, "{}-{}i", format_rational(a), format_rational(&-b))
                } else {
                    write!(f, "{}+{}i", format_rational(a), format_rational(b))
                }
            }
            _ => {
                let z = self.to_complex();
                if z.im < 0.0 {
                    write!(f, "{}-{}i", z.re, -z.im)
                } else {
                    write!(f, "{}+{}i", z.re, z.im)
                }
            }
        }
    }
}

impl Serialize for CValue {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for CValue {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        CValue::parse(&s).map_err(crate::error::de_error)
    }
}

impl Add for &CValue {
    type Output = CValue;
    fn add(self, rhs: &CValue) -> CValue {
        CValue::new(&self.re + &rhs.re, &self.im + &rhs.im)
    }
}

impl Add for CValue {
    type Output = CValue;
    fn add(self, rhs: CValue) -> CValue {
        &self + &rhs
    }
}

impl Sub for &CValue {
    type Output = CValue;
    fn sub(self, rhs: &CValue) -> CValue {
        CValue::new(&self.re - &rhs.re, &self.im - &rhs.im)
    }
}

impl Mul for &CValue {
    type Output = CValue;
    fn mul(self, rhs: &CValue) -> CValue {
        CValue::new(
            &(&self.re * &rhs.re) - &(&self.im * &rhs.im),
            &(&self.re * &rhs.im) + &(&self.im * &rhs.re),
        )
    }
}

impl Neg for &CValue {
    type Output = CValue;
    fn neg(self) -> CValue {
        CValue::new(-&self.re, -&self.im)
    }
}

/// Ordered field used by the polytope kernels: exact rationals or
/// tolerance-compared floats.
pub trait Field: Clone + fmt::Debug + Send + Sync + 'static {
    const EXACT: bool;
    fn f_zero() -> Self;
    fn f_one() -> Self;
    fn f_from_i64(v: i64) -> Self;
    fn f_from_real(r: &Real) -> Self;
    fn f_add(&self, o: &Self) -> Self;
    fn f_sub(&self, o: &Self) -> Self;
    fn f_mul(&self, o: &Self) -> Self;
    fn f_div(&self, o: &Self) -> Self;
    fn f_neg(&self) -> Self;
    fn f_sign(&self) -> Ordering;
    fn f_to_f64(&self) -> f64;
    fn f_to_real(&self) -> Real;

    fn f_is_zero(&self) -> bool {
        self.f_sign() == Ordering::Equal
    }
    fn f_is_pos(&self) -> bool {
        self.f_sign() == Ordering::Greater
    }
    fn f_is_neg(&self) -> bool {
        self.f_sign() == Ordering::Less
    }
    fn f_cmp_to(&self, o: &Self) -> Ordering {
        self.f_sub(o).f_sign()
    }
}

impl Field for Rational {
    const EXACT: bool = true;
    fn f_zero() -> Self {
        Zero::zero()
    }
    fn f_one() -> Self {
        One::one()
    }
    fn f_from_i64(v: i64) -> Self {
        int(v)
    }
    fn f_from_real(r: &Real) -> Self {
        match r {
            Real::Exact(q) => q.clone(),
            Real::Float(x) => f64_to_rat(*x),
        }
    }
    fn f_add(&self, o: &Self) -> Self {
        self + o
    }
    fn f_sub(&self, o: &Self) -> Self {
        self - o
    }
    fn f_mul(&self, o: &Self) -> Self {
        self * o
    }
    fn f_div(&self, o: &Self) -> Self {
        self / o
    }
    fn f_neg(&self) -> Self {
        -self
    }
    fn f_sign(&self) -> Ordering {
        self.cmp(&Rational::zero())
    }
    fn f_to_f64(&self) -> f64 {
        rat_to_f64(self)
    }
    fn f_to_real(&self) -> Real {
        Real::Exact(self.clone())
    }
}

impl Field for f64 {
    const EXACT: bool = false;
    fn f_zero() -> Self {
        0.0
    }
    fn f_one() -> Self {
        1.0
    }
    fn f_from_i64(v: i64) -> Self {
        v as f64
    }
    fn f_from_real(r: &Real) -> Self {
        r.to_f64()
    }
    fn f_add(&self, o: &Self) -> Self {
        self + o
    }
    fn f_sub(&self, o: &Self) -> Self {
        self - o
    }
    fn f_mul(&self, o: &Self) -> Self {
        self * o
    }
    fn f_div(&self, o: &Self) -> Self {
        self / o
    }
    fn f_neg(&self) -> Self {
        -self
    }
    fn f_sign(&self) -> Ordering {
        float_sign(*self)
    }
    fn f_to_f64(&self) -> f64 {
        *self
    }
    fn f_to_real(&self) -> Real {
        Real::Float(*self)
    }
}

pub fn dot<F: Field>(a: &[F], b: &[F]) -> F {
    a.iter()
        .zip(b)
        .fold(F::f_zero(), |acc, (x, y)| acc.f_add(&x.f_mul(y)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_rationals_exactly() {
        assert_eq!(parse_rational("1/3").unwrap(), rat(1, 3));
        assert_eq!(parse_rational("-0.25").unwrap(), rat(-1, 4));
        assert_eq!(parse_rational("1e-3").unwrap(), rat(1, 1000));
        assert_eq!(parse_rational("2.5e1").unwrap(), int(25));
        assert!(parse_rational("abc").is_err());
        assert!(parse_rational("1/0").is_err());
    }

    #[test]
    fn parses_complex_strings() {
        let z = CValue::parse("1+2i").unwrap();
        assert_eq!(z.re.as_exact().unwrap(), &int(1));
        assert_eq!(z.im.as_exact().unwrap(), &int(2));
        let z = CValue::parse("1/2-3/4i").unwrap();
        assert_eq!(z.im.as_exact().unwrap(), &rat(-3, 4));
        let z = CValue::parse("-i").unwrap();
        assert_eq!(z.re.as_exact().unwrap(), &int(0));
        assert_eq!(z.im.as_exact().unwrap(), &int(-1));
        let z = CValue::parse("i").unwrap();
        assert_eq!(z.im.as_exact().unwrap(), &int(1));
        let z = CValue::parse("3").unwrap();
        assert_eq!(z.re.as_exact().unwrap(), &int(3));
        let z = CValue::parse("1e-2+1e-3i").unwrap();
        assert_eq!(z.im.as_exact().unwrap(), &rat(1, 1000));
    }

    #[test]
    fn display_round_trips() {
        for s in ["1+2i", "-1/2-3i", "0+1i", "7+0i"] {
            let z = CValue::parse(s).unwrap();
            let back = CValue::parse(&z.to_string()).unwrap();
            assert!(z.approx_eq(&back, 0.0));
        }
    }

    #[test]
    fn exact_zero_absorbs_floats() {
        let p = &Real::zero() * &Real::Float(std::f64::consts::PI);
        assert!(p.is_exact());
        let q = &Real::from_i64(2) * &Real::Float(0.5);
        assert!(!q.is_exact());
        assert_eq!(q.to_f64(), 1.0);
    }
}
