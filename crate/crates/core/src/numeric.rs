//! Exact rational scalars and the comparison primitives built on them.
//!
//! [`Rational`] wraps an arbitrary-precision fraction kept in lowest terms.
//! It renders losslessly as `"p/q"` (or `"p"` for integers) and parses both
//! that form and plain decimals such as `"-2.75"` or `"1e-3"`.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// An exact rational number.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Rational(BigRational);

impl Rational {
    pub fn new(numer: impl Into<BigInt>, denom: impl Into<BigInt>) -> Result<Self> {
        let d = denom.into();
        if d.is_zero() {
            return Err(Error::InvalidArgument("zero denominator".into()));
        }
        Ok(Rational(BigRational::new(numer.into(), d)))
    }

    /// Shorthand for small literals; panics on a zero denominator.
    pub fn ratio(numer: i64, denom: i64) -> Self {
        Rational::new(numer, denom).expect("nonzero denominator")
    }

    pub fn from_integer(n: impl Into<BigInt>) -> Self {
        Rational(BigRational::from_integer(n.into()))
    }

    pub fn zero() -> Self {
        Rational(BigRational::zero())
    }

    pub fn one() -> Self {
        Rational(BigRational::one())
    }

    pub fn numer(&self) -> &BigInt {
        self.0.numer()
    }

    pub fn denom(&self) -> &BigInt {
        self.0.denom()
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_positive(&self) -> bool {
        self.0.is_positive()
    }

    pub fn is_negative(&self) -> bool {
        self.0.is_negative()
    }

    pub fn is_integer(&self) -> bool {
        self.0.is_integer()
    }

    pub fn abs(&self) -> Self {
        Rational(self.0.abs())
    }

    pub fn recip(&self) -> Result<Self> {
        if self.is_zero() {
            return Err(Error::InvalidArgument("reciprocal of zero".into()));
        }
        Ok(Rational(self.0.recip()))
    }

    pub fn pow(&self, exp: i32) -> Self {
        Rational(num_traits::Pow::pow(&self.0, exp))
    }

    pub fn floor(&self) -> BigInt {
        self.0.floor().to_integer()
    }

    pub fn ceil(&self) -> BigInt {
        self.0.ceil().to_integer()
    }

    /// Integer nearest to `self`, with exact halves resolved downward.
    pub fn round_half_down(&self) -> BigInt {
        let half = Rational::ratio(1, 2);
        (self - &half).ceil()
    }

    pub fn min(self, other: Self) -> Self {
        std::cmp::min(self, other)
    }

    pub fn max(self, other: Self) -> Self {
        std::cmp::max(self, other)
    }

    pub fn midpoint(&self, other: &Rational) -> Rational {
        (self + other) / Rational::from_integer(2)
    }

    /// Approximate value for display and diagnostics only.
    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }

    /// Fixed-precision decimal rendering, rounded half away from zero.
    pub fn to_decimal(&self, digits: usize) -> String {
        let scale = BigInt::from(10u32).pow(digits as u32);
        let scaled = &self.0 * BigRational::from_integer(scale.clone());
        let mag = scaled.abs();
        let (q, r) = mag.numer().div_rem(mag.denom());
        let rounded = if r.clone() * 2u32 >= *mag.denom() {
            q + 1u32
        } else {
            q
        };
        let negative = self.is_negative() && !rounded.is_zero();
        let s = rounded.to_string();
        let (int_part, frac_part) = if digits == 0 {
            (s, String::new())
        } else if s.len() > digits {
            let (a, b) = s.split_at(s.len() - digits);
            (a.to_string(), b.to_string())
        } else {
            ("0".to_string(), format!("{:0>width$}", s, width = digits))
        };
        let mut out = String::new();
        if negative {
            out.push('-');
        }
        out.push_str(&int_part);
        if digits > 0 {
            out.push('.');
            out.push_str(&frac_part);
        }
        out
    }

    pub fn as_big(&self) -> &BigRational {
        &self.0
    }
}

impl From<i64> for Rational {
    fn from(n: i64) -> Self {
        Rational::from_integer(n)
    }
}

impl From<u64> for Rational {
    fn from(n: u64) -> Self {
        Rational::from_integer(n)
    }
}

impl From<BigInt> for Rational {
    fn from(n: BigInt) -> Self {
        Rational::from_integer(n)
    }
}

impl From<BigRational> for Rational {
    fn from(q: BigRational) -> Self {
        Rational(q)
    }
}

macro_rules! binop {
    ($tr:ident, $method:ident, $op:tt) => {
        impl $tr<Rational> for Rational {
            type Output = Rational;
            fn $method(self, rhs: Rational) -> Rational {
                Rational(self.0 $op rhs.0)
            }
        }
        impl<'a> $tr<&'a Rational> for Rational {
            type Output = Rational;
            fn $method(self, rhs: &'a Rational) -> Rational {
                Rational(self.0 $op &rhs.0)
            }
        }
        impl<'a> $tr<Rational> for &'a Rational {
            type Output = Rational;
            fn $method(self, rhs: Rational) -> Rational {
                Rational(&self.0 $op rhs.0)
            }
        }
        impl<'a, 'b> $tr<&'b Rational> for &'a Rational {
            type Output = Rational;
            fn $method(self, rhs: &'b Rational) -> Rational {
                Rational(&self.0 $op &rhs.0)
            }
        }
    };
}

binop!(Add, add, +);
binop!(Sub, sub, -);
binop!(Mul, mul, *);
binop!(Div, div, /);

impl AddAssign<&Rational> for Rational {
    fn add_assign(&mut self, rhs: &Rational) {
        self.0 += &rhs.0;
    }
}

impl SubAssign<&Rational> for Rational {
    fn sub_assign(&mut self, rhs: &Rational) {
        self.0 -= &rhs.0;
    }
}

impl MulAssign<&Rational> for Rational {
    fn mul_assign(&mut self, rhs: &Rational) {
        self.0 *= &rhs.0;
    }
}

impl Neg for Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        Rational(-self.0)
    }
}

impl Neg for &Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        Rational(-&self.0)
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_integer() {
            write!(f, "{}", self.0.numer())
        } else {
            write!(f, "{}/{}", self.0.numer(), self.0.denom())
        }
    }
}

impl fmt::Debug for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

fn parse_int(s: &str, whole: &str) -> Result<BigInt> {
    let body = s.strip_prefix('+').unwrap_or(s);
    if body.is_empty()
        || !body
            .trim_start_matches('-')
            .bytes()
            .all(|b| b.is_ascii_digit())
    {
        return Err(Error::Parse(format!("not a rational: {whole:?}")));
    }
    BigInt::from_str(body).map_err(|_| Error::Parse(format!("not a rational: {whole:?}")))
}

fn parse_decimal(s: &str) -> Result<Rational> {
    let bad = || Error::Parse(format!("not a rational: {s:?}"));
    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(i) => {
            let e: i64 = s[i + 1..].parse().map_err(|_| bad())?;
            (&s[..i], e)
        }
        None => (s, 0),
    };
    let (negative, digits) = match mantissa.as_bytes().first() {
        Some(b'-') => (true, &mantissa[1..]),
        Some(b'+') => (false, &mantissa[1..]),
        _ => (false, mantissa),
    };
    let (int_part, frac_part) = match digits.split_once('.') {
        Some((a, b)) => (a, b),
        None => (digits, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(bad());
    }
    if !int_part
        .bytes()
        .chain(frac_part.bytes())
        .all(|b| b.is_ascii_digit())
    {
        return Err(bad());
    }
    if exponent.unsigned_abs() > 10_000 {
        return Err(bad());
    }
    let all = format!("{int_part}{frac_part}");
    let mut numer = BigInt::from_str(if all.is_empty() { "0" } else { &all }).map_err(|_| bad())?;
    if negative {
        numer = -numer;
    }
    let shift = exponent - frac_part.len() as i64;
    let ten = BigInt::from(10u32);
    let q = if shift >= 0 {
        Rational::from_integer(numer * ten.pow(shift as u32))
    } else {
        Rational::new(numer, ten.pow((-shift) as u32))?
    };
    Ok(q)
}

impl FromStr for Rational {
    type Err = Error;

    fn from_str(raw: &str) -> Result<Self> {
        let s = raw.trim();
        if s.is_empty() {
            return Err(Error::Parse("empty rational".into()));
        }
        if let Some((p, q)) = s.split_once('/') {
            let p = parse_int(p.trim(), s)?;
            let q = parse_int(q.trim(), s)?;
            if q.is_zero() {
                return Err(Error::Parse(format!("zero denominator in {s:?}")));
            }
            return Rational::new(p, q);
        }
        parse_decimal(s)
    }
}

impl Serialize for Rational {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Rational {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Floor of `q` together with whether `q` is itself an integer.
pub fn floor_strict(q: &Rational) -> (BigInt, bool) {
    (q.floor(), q.is_integer())
}

/// Orders `x` against the positive real `y^(1/m)` without leaving ℚ.
///
/// Negative `x` is always `Less`; otherwise `x^m` is compared with `y`.
pub fn cmp_power(x: &Rational, y: &Rational, m: u32) -> Result<Ordering> {
    if !y.is_positive() {
        return Err(Error::InvalidArgument(format!(
            "cmp_power needs y > 0, got {y}"
        )));
    }
    if m == 0 {
        return Err(Error::InvalidArgument("cmp_power needs m >= 1".into()));
    }
    if !x.is_positive() {
        return Ok(Ordering::Less);
    }
    Ok(x.pow(m as i32).cmp(y))
}

/// Rational bracket `lo <= y^(1/m) <= hi` with `hi - lo <= resolution`.
pub fn root_bracket(y: &Rational, m: u32, resolution: &Rational) -> Result<(Rational, Rational)> {
    if !resolution.is_positive() {
        return Err(Error::InvalidArgument("resolution must be positive".into()));
    }
    if m == 1 {
        return Ok((y.clone(), y.clone()));
    }
    let mut lo = Rational::zero();
    let mut hi = y.clone().max(Rational::one());
    match cmp_power(&hi, y, m)? {
        Ordering::Equal => return Ok((hi.clone(), hi)),
        Ordering::Less => unreachable!("max(1, y) bounds the root from above"),
        Ordering::Greater => {}
    }
    while &hi - &lo > *resolution {
        let mid = lo.midpoint(&hi);
        match cmp_power(&mid, y, m)? {
            Ordering::Equal => return Ok((mid.clone(), mid)),
            Ordering::Less => lo = mid,
            Ordering::Greater => hi = mid,
        }
    }
    Ok((lo, hi))
}

/// Rational bracket `lo <= e^t <= hi` with `hi / lo - 1 <= resolution`.
///
/// Taylor series on `t / 2^k`, rounded outward to a dyadic grid, then
/// squared `k` times.
pub fn exp_bracket(t: &Rational, resolution: &Rational) -> Result<(Rational, Rational)> {
    if !resolution.is_positive() {
        return Err(Error::InvalidArgument("resolution must be positive".into()));
    }
    if t.is_zero() {
        return Ok((Rational::one(), Rational::one()));
    }
    if t.is_negative() {
        let (lo, hi) = exp_bracket(&-t, resolution)?;
        return Ok((hi.recip()?, lo.recip()?));
    }
    let res = resolution.clone().min(Rational::ratio(1, 4));
    let half = Rational::ratio(1, 2);
    let mut k: u32 = 0;
    let mut u = t.clone();
    while u > half {
        u = &u / Rational::from(2i64);
        k += 1;
    }
    let scale = Rational::from_integer(BigInt::one() << k);
    let target = &res / (Rational::from(8i64) * &scale);
    let mut sum = Rational::one();
    let mut term = Rational::one();
    let mut i: i64 = 1;
    loop {
        term = &term * &u / Rational::from(i);
        sum += &term;
        let tail = &term * &u * Rational::from(2i64) / Rational::from(i + 1);
        if tail <= target {
            let mut bits: u64 = 8;
            while Rational::ratio(1, 1) / Rational::from_integer(BigInt::one() << bits) > target {
                bits += 1;
            }
            let grid = BigInt::one() << bits;
            let g = Rational::from_integer(grid.clone());
            let mut lo = Rational::new((&sum * &g).floor(), grid.clone())?;
            let mut hi = Rational::new(((&sum + &tail) * &g).ceil(), grid)?;
            for _ in 0..k {
                lo = lo.pow(2);
                hi = hi.pow(2);
            }
            return Ok((lo, hi));
        }
        i += 1;
    }
}

/// A rational extended by `+∞`, ordered with `Infinite` above every finite value.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum ExtRational {
    Finite(Rational),
    Infinite,
}

impl ExtRational {
    pub fn finite(&self) -> Option<&Rational> {
        match self {
            ExtRational::Finite(q) => Some(q),
            ExtRational::Infinite => None,
        }
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, ExtRational::Infinite)
    }

    /// Divides by a positive rational; `∞ / a = ∞`.
    pub fn div_by(&self, a: &Rational) -> ExtRational {
        match self {
            ExtRational::Finite(q) => ExtRational::Finite(q / a),
            ExtRational::Infinite => ExtRational::Infinite,
        }
    }

    /// Multiplies by a positive rational; `∞ · a = ∞`.
    pub fn mul_by(&self, a: &Rational) -> ExtRational {
        match self {
            ExtRational::Finite(q) => ExtRational::Finite(q * a),
            ExtRational::Infinite => ExtRational::Infinite,
        }
    }
}

impl From<Rational> for ExtRational {
    fn from(q: Rational) -> Self {
        ExtRational::Finite(q)
    }
}

impl PartialEq<Rational> for ExtRational {
    fn eq(&self, other: &Rational) -> bool {
        matches!(self, ExtRational::Finite(q) if q == other)
    }
}

impl PartialOrd<Rational> for ExtRational {
    fn partial_cmp(&self, other: &Rational) -> Option<Ordering> {
        Some(match self {
            ExtRational::Finite(q) => q.cmp(other),
            ExtRational::Infinite => Ordering::Greater,
        })
    }
}

impl fmt::Display for ExtRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtRational::Finite(q) => write!(f, "{q}"),
            ExtRational::Infinite => f.write_str("inf"),
        }
    }
}

impl FromStr for ExtRational {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "inf" | "+inf" | "∞" | "infinity" => Ok(ExtRational::Infinite),
            other => Ok(ExtRational::Finite(other.parse()?)),
        }
    }
}

impl Serialize for ExtRational {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ExtRational {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
