//! Exact arbitrary-precision rationals with decimal-string ingestion.
//!
//! `Rat` is the exact side of every dual-route computation in this crate:
//! shifts, witness values, residuals, and all certificate constants stay in
//! `Rat` so that every inequality the certificates assert can be re-checked
//! without rounding.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use super::dyadic::Dyadic;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RatParseError {
    #[error("empty numeric literal")]
    Empty,
    #[error("malformed numeric literal {0:?}")]
    Malformed(String),
    #[error("zero denominator in {0:?}")]
    ZeroDenominator(String),
}

/// Canonical arbitrary-precision rational (reduced, denominator positive).
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Rat(BigRational);

impl Rat {
    pub fn new(num: BigInt, den: BigInt) -> Self {
        Rat(BigRational::new(num, den))
    }

    pub fn from_int(n: i64) -> Self {
        Rat(BigRational::from_integer(BigInt::from(n)))
    }

    pub fn from_bigint(n: BigInt) -> Self {
        Rat(BigRational::from_integer(n))
    }

    pub fn ratio(num: i64, den: i64) -> Self {
        Rat::new(BigInt::from(num), BigInt::from(den))
    }

    pub fn zero() -> Self {
        Rat(BigRational::zero())
    }

    pub fn one() -> Self {
        Rat(BigRational::one())
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
        Rat(self.0.abs())
    }

    pub fn recip(&self) -> Self {
        Rat(self.0.recip())
    }

    pub fn min(self, other: Self) -> Self {
        if self <= other {
            self
        } else {
            other
        }
    }

    pub fn max(self, other: Self) -> Self {
        if self >= other {
            self
        } else {
            other
        }
    }

    /// Integer power with negative exponents allowed (value must be nonzero
    /// for those).
    pub fn pow_i(&self, j: i64) -> Self {
        Rat(self.0.pow(j as i32))
    }

    pub fn floor_bigint(&self) -> BigInt {
        self.0.floor().to_integer()
    }

    pub fn ceil_bigint(&self) -> BigInt {
        self.0.ceil().to_integer()
    }

    /// Smallest integer `>= self`, as u64. Errors density: callers only use
    /// this for side-condition thresholds that are small by construction.
    pub fn ceil_u64(&self) -> Option<u64> {
        self.ceil_bigint().to_u64()
    }

    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }

    /// Exact conversion when the denominator is a power of two.
    pub fn to_dyadic(&self) -> Option<Dyadic> {
        let den = self.denom().magnitude();
        if den.count_ones() == 1 {
            let t = den.trailing_zeros().unwrap_or(0);
            Some(Dyadic::new(self.numer().clone(), -(t as i64)))
        } else {
            None
        }
    }

    pub fn from_dyadic(d: &Dyadic) -> Self {
        let e = d.exp();
        if e >= 0 {
            Rat::from_bigint(d.mant() << e as u64)
        } else {
            Rat::new(d.mant().clone(), BigInt::one() << (-e) as u64)
        }
    }

    /// Parse a decimal literal ("0.3", "-2", "1e-3", "2.5e3") or an explicit
    /// fraction ("9/50").
    pub fn parse(text: &str) -> Result<Self, RatParseError> {
        let t = text.trim();
        if t.is_empty() {
            return Err(RatParseError::Empty);
        }
        if let Some((num, den)) = t.split_once('/') {
            let n = BigInt::from_str(num.trim())
                .map_err(|_| RatParseError::Malformed(text.to_string()))?;
            let d = BigInt::from_str(den.trim())
                .map_err(|_| RatParseError::Malformed(text.to_string()))?;
            if d.is_zero() {
                return Err(RatParseError::ZeroDenominator(text.to_string()));
            }
            return Ok(Rat::new(n, d));
        }
        parse_decimal(t).ok_or_else(|| RatParseError::Malformed(text.to_string()))
    }

    /// Decimal rendering. Exact when the denominator is 2^a * 5^b; otherwise
    /// truncated toward zero at `max_places` digits. Deterministic.
    pub fn to_decimal_string(&self, max_places: usize) -> String {
        let neg = self.is_negative();
        let num = self.numer().magnitude().clone();
        let den = self.denom().magnitude().clone();
        let (int, mut rem) = num.div_rem(&den);
        let mut digits = String::new();
        let ten = num_bigint::BigUint::from(10u32);
        let mut exact = rem.is_zero();
        for _ in 0..max_places {
            if rem.is_zero() {
                break;
            }
            rem *= &ten;
            let (d, r) = rem.div_rem(&den);
            digits.push(char::from(b'0' + d.to_u8().unwrap_or(0)));
            rem = r;
        }
        if rem.is_zero() {
            exact = true;
        }
        while digits.ends_with('0') {
            digits.pop();
        }
        let mut out = String::new();
        if neg {
            out.push('-');
        }
        out.push_str(&int.to_string());
        if !digits.is_empty() {
            out.push('.');
            out.push_str(&digits);
        }
        if !exact {
            // truncated rendering is marked so it cannot be mistaken for exact
            out.push('~');
        }
        out
    }
}

fn parse_decimal(t: &str) -> Option<Rat> {
    let (mantissa, exp10) = match t.find(['e', 'E']) {
        Some(pos) => {
            let exp: i64 = t[pos + 1..].parse().ok()?;
            (&t[..pos], exp)
        }
        None => (t, 0i64),
    };
    let (sign, rest) = match mantissa.strip_prefix('-') {
        Some(r) => (-1i64, r),
        None => (1i64, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = match rest.split_once('.') {
        Some((a, b)) => (a, b),
        None => (rest, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.bytes().all(|b| b.is_ascii_digit()) || !frac_part.bytes().all(|b| b.is_ascii_digit())
    {
        return None;
    }
    let digits = format!("{int_part}{frac_part}");
    let digits = if digits.is_empty() { "0".to_string() } else { digits };
    let num = BigInt::from_str(&digits).ok()? * BigInt::from(sign);
    let scale = frac_part.len() as i64 - exp10;
    let r = if scale >= 0 {
        Rat::new(num, BigInt::from(10u32).pow(scale as u32))
    } else {
        Rat::from_bigint(num * BigInt::from(10u32).pow((-scale) as u32))
    };
    Some(r)
}

macro_rules! rat_binop {
    ($tr:ident, $m:ident, $op:tt) => {
        impl $tr for &Rat {
            type Output = Rat;
            fn $m(self, rhs: &Rat) -> Rat {
                Rat(&self.0 $op &rhs.0)
            }
        }
        impl $tr for Rat {
            type Output = Rat;
            fn $m(self, rhs: Rat) -> Rat {
                Rat(self.0 $op rhs.0)
            }
        }
    };
}

rat_binop!(Add, add, +);
rat_binop!(Sub, sub, -);
rat_binop!(Mul, mul, *);
rat_binop!(Div, div, /);

impl Neg for &Rat {
    type Output = Rat;
    fn neg(self) -> Rat {
        Rat(-self.0.clone())
    }
}

impl fmt::Display for Rat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_integer() {
            write!(f, "{}", self.numer())
        } else {
            write!(f, "{}/{}", self.numer(), self.denom())
        }
    }
}

impl fmt::Debug for Rat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl Serialize for Rat {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Rat {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        Rat::parse(&s).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_decimals() {
        assert_eq!(Rat::parse("0.5").unwrap(), Rat::ratio(1, 2));
        assert_eq!(Rat::parse("0.3").unwrap(), Rat::ratio(3, 10));
        assert_eq!(Rat::parse("-2").unwrap(), Rat::from_int(-2));
        assert_eq!(Rat::parse("1e-3").unwrap(), Rat::ratio(1, 1000));
        assert_eq!(Rat::parse("2.5e3").unwrap(), Rat::from_int(2500));
        assert_eq!(Rat::parse("9/50").unwrap(), Rat::ratio(9, 50));
    }

    #[test]
    fn parse_rejects_garbage() {
        assert!(Rat::parse("1e-3x").is_err());
        assert!(Rat::parse("").is_err());
        assert!(Rat::parse("1/0").is_err());
        assert!(Rat::parse("0x12").is_err());
        assert!(Rat::parse(".").is_err());
    }

    #[test]
    fn dyadic_round_trip() {
        let r = Rat::ratio(-13, 8);
        let d = r.to_dyadic().unwrap();
        assert_eq!(Rat::from_dyadic(&d), r);
        assert!(Rat::ratio(1, 3).to_dyadic().is_none());
    }

    #[test]
    fn negative_powers() {
        let r = Rat::from_int(3);
        assert_eq!(r.pow_i(-2), Rat::ratio(1, 9));
        assert_eq!(r.pow_i(0), Rat::one());
        assert_eq!(r.pow_i(3), Rat::from_int(27));
    }

    #[test]
    fn decimal_rendering() {
        assert_eq!(Rat::ratio(29, 50).to_decimal_string(12), "0.58");
        assert_eq!(Rat::ratio(975, 2).to_decimal_string(12), "487.5");
        assert_eq!(Rat::from_int(220).to_decimal_string(12), "220");
        assert_eq!(Rat::ratio(1, 3).to_decimal_string(4), "0.3333~");
        assert_eq!(Rat::ratio(-1, 4).to_decimal_string(4), "-0.25");
    }
}
