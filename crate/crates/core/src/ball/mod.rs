//! Midpoint–radius enclosures of real numbers with directed rounding.
//!
//! A [`Ball`] encloses an unknown real `x` with the contract
//! `|x - mid| <= rad`, where `mid` and `rad` are exact dyadic rationals.
//! Arithmetic preserves containment: the result of any operation encloses
//! every possible value of the operation applied to members of the operand
//! balls. Strict inequalities between enclosed reals are decided by
//! [`Ball::lt`], which returns a [`TriBool`] and never asserts an inequality
//! that could be false.

mod dyadic;
mod rat;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use dyadic::Dyadic;
pub use rat::{Rat, RatParseError};

/// Radii are kept to this many mantissa bits, rounded up.
const RAD_BITS: u32 = 16;

/// Minimum admissible working precision.
pub const MIN_PREC: u32 = 2;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BallError {
    #[error(transparent)]
    Parse(#[from] RatParseError),
    #[error("precision must be >= {MIN_PREC} bits, got {0}")]
    BadPrecision(u32),
    #[error("k-th root requires a strictly positive enclosure (inf = {0})")]
    RootDomain(String),
}

/// Three-valued verdict of a certified comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TriBool {
    True,
    False,
    Unknown,
}

impl TriBool {
    pub fn is_true(self) -> bool {
        self == TriBool::True
    }

    pub fn is_false(self) -> bool {
        self == TriBool::False
    }

    pub fn is_unknown(self) -> bool {
        self == TriBool::Unknown
    }

    pub fn from_bool(b: bool) -> Self {
        if b {
            TriBool::True
        } else {
            TriBool::False
        }
    }
}

/// Rigorous enclosure `{x : |x - mid| <= rad}` with a working precision.
#[derive(Clone, PartialEq, Eq)]
pub struct Ball {
    mid: Dyadic,
    rad: Dyadic,
    prec: u32,
}

impl Ball {
    /// Exact ball (radius zero) around a dyadic value.
    pub fn exact(mid: Dyadic, prec: u32) -> Self {
        Ball { mid, rad: Dyadic::zero(), prec: prec.max(MIN_PREC) }
    }

    pub fn from_int(n: i64, prec: u32) -> Self {
        Ball::exact(Dyadic::from_int(n), prec)
    }

    /// Construct from explicit midpoint and radius. Radius must be >= 0.
    pub fn with_radius(mid: Dyadic, rad: Dyadic, prec: u32) -> Self {
        assert!(!rad.is_negative(), "negative radius");
        Ball { mid, rad, prec: prec.max(MIN_PREC) }
    }

    /// Enclose an exact rational. Exact when the denominator is a power of
    /// two; otherwise relative error at most 2^(-prec).
    pub fn from_rat(r: &Rat, prec: u32) -> Self {
        let prec = prec.max(MIN_PREC);
        if let Some(d) = r.to_dyadic() {
            return Ball::exact(d, prec);
        }
        let num = r.numer();
        let den = r.denom(); // > 0
        let nb = num.magnitude().bits() as i64;
        let db = den.magnitude().bits() as i64;
        let sigma = (prec as i64 + 2 + db - nb).max(0);
        let q = num_integer::Integer::div_floor(&(num << sigma as u64), den);
        // value in [q, q+1] * 2^-sigma
        let mid = Dyadic::new((q << 1u8) + 1, -sigma - 1);
        let rad = Dyadic::pow2(-sigma - 1);
        let (mid_r, err) = mid.round_nearest(prec);
        Ball { mid: mid_r, rad: rad.add(&err).round_up_mag(RAD_BITS), prec }
    }

    /// Parse a finite decimal (or `p/q`) string into an enclosure of its
    /// exact value.
    pub fn from_decimal(text: &str, prec: u32) -> Result<Self, BallError> {
        if prec < MIN_PREC {
            return Err(BallError::BadPrecision(prec));
        }
        let r = Rat::parse(text)?;
        Ok(Ball::from_rat(&r, prec))
    }

    pub fn mid(&self) -> &Dyadic {
        &self.mid
    }

    pub fn rad(&self) -> &Dyadic {
        &self.rad
    }

    pub fn prec(&self) -> u32 {
        self.prec
    }

    pub fn is_exact(&self) -> bool {
        self.rad.is_zero()
    }

    /// Exact lower endpoint `mid - rad`.
    pub fn inf(&self) -> Dyadic {
        self.mid.sub(&self.rad)
    }

    /// Exact upper endpoint `mid + rad`.
    pub fn sup(&self) -> Dyadic {
        self.mid.add(&self.rad)
    }

    pub fn inf_rat(&self) -> Rat {
        Rat::from_dyadic(&self.inf())
    }

    pub fn sup_rat(&self) -> Rat {
        Rat::from_dyadic(&self.sup())
    }

    fn work_prec(&self, other: &Ball) -> u32 {
        self.prec.min(other.prec)
    }

    pub fn neg(&self) -> Self {
        Ball { mid: self.mid.neg(), rad: self.rad.clone(), prec: self.prec }
    }

    pub fn add(&self, other: &Ball) -> Self {
        let prec = self.work_prec(other);
        let (mid, err) = self.mid.add(&other.mid).round_nearest(prec);
        let rad = self.rad.add(&other.rad).add(&err).round_up_mag(RAD_BITS);
        Ball { mid, rad, prec }
    }

    pub fn sub(&self, other: &Ball) -> Self {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Ball) -> Self {
        let prec = self.work_prec(other);
        let (mid, err) = self.mid.mul(&other.mid).round_nearest(prec);
        let cross = self
            .mid
            .abs()
            .mul(&other.rad)
            .add(&other.mid.abs().mul(&self.rad))
            .add(&self.rad.mul(&other.rad));
        let rad = cross.add(&err).round_up_mag(RAD_BITS);
        Ball { mid, rad, prec }
    }

    /// Multiply by an exact rational.
    pub fn mul_rat(&self, r: &Rat) -> Self {
        self.mul(&Ball::from_rat(r, self.prec))
    }

    /// `x^j` for every `x` in the ball, by square and multiply.
    pub fn pow_u(&self, j: u32) -> Self {
        if j == 0 {
            return Ball::exact(Dyadic::one(), self.prec);
        }
        let mut base = self.clone();
        let mut acc: Option<Ball> = None;
        let mut e = j;
        loop {
            if e & 1 == 1 {
                acc = Some(match acc {
                    None => base.clone(),
                    Some(a) => a.mul(&base),
                });
            }
            e >>= 1;
            if e == 0 {
                break;
            }
            base = base.mul(&base);
        }
        acc.expect("j >= 1")
    }

    /// Enclosure of `|x|` for `x` in the ball.
    pub fn abs(&self) -> Self {
        if !self.inf().is_negative() {
            return self.clone();
        }
        if !self.sup().is_positive() {
            return self.neg();
        }
        // straddles zero: |x| ranges over [0, max(|inf|, sup)]
        let m = self.inf().abs().max(self.sup());
        let half = m.half();
        Ball {
            mid: half.clone(),
            rad: half.round_up_mag(RAD_BITS),
            prec: self.prec,
        }
    }

    /// Enclosure of `x^(1/k)` for every `x` in the ball. The enclosure must
    /// be strictly positive.
    pub fn root(&self, k: u32, prec: u32) -> Result<Self, BallError> {
        assert!(k >= 1);
        let prec = prec.max(MIN_PREC);
        let lo = self.inf();
        if !lo.is_positive() {
            return Err(BallError::RootDomain(format!("{lo:?}")));
        }
        let hi = self.sup();
        let (rlo, _, _) = lo.root_floor(k, prec + 2);
        let rhi = hi.root_ceil(k, prec + 2);
        let mid = rlo.add(&rhi).half();
        let rad = rhi.sub(&rlo).half();
        let (mid_r, err) = mid.round_nearest(prec);
        Ok(Ball { mid: mid_r, rad: rad.add(&err).round_up_mag(RAD_BITS), prec })
    }

    /// Certified strict comparison: `True` iff every x in self is less than
    /// every y in other, `False` iff no x is less than any y, else `Unknown`.
    pub fn lt(&self, other: &Ball) -> TriBool {
        if self.sup() < other.inf() {
            TriBool::True
        } else if self.inf() >= other.sup() {
            TriBool::False
        } else {
            TriBool::Unknown
        }
    }

    /// Certified `r < (value enclosed by self)` for an exact rational r.
    pub fn gt_rat(&self, r: &Rat) -> TriBool {
        if &self.inf_rat() > r {
            TriBool::True
        } else if &self.sup_rat() <= r {
            TriBool::False
        } else {
            TriBool::Unknown
        }
    }

    /// Certified `(value enclosed by self) < r`.
    pub fn lt_rat(&self, r: &Rat) -> TriBool {
        if &self.sup_rat() < r {
            TriBool::True
        } else if &self.inf_rat() >= r {
            TriBool::False
        } else {
            TriBool::Unknown
        }
    }

    /// Containment test against an exact rational (used by oracles).
    pub fn contains_rat(&self, r: &Rat) -> bool {
        let m = Rat::from_dyadic(&self.mid);
        let rr = Rat::from_dyadic(&self.rad);
        (r - &m).abs() <= rr
    }

    /// Midpoint as rational (for reporting).
    pub fn mid_rat(&self) -> Rat {
        Rat::from_dyadic(&self.mid)
    }
}

/// Certified comparison `a < b` on enclosures (operation form of
/// [`Ball::lt`]).
pub fn cmp_lt(a: &Ball, b: &Ball) -> TriBool {
    a.lt(b)
}

impl fmt::Debug for Ball {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{} ± {}]",
            self.mid_rat().to_decimal_string(12),
            Rat::from_dyadic(&self.rad).to_decimal_string(12)
        )
    }
}

/// Serialized form: exact dyadic midpoint and radius, plus precision.
#[derive(Serialize, Deserialize)]
struct BallRepr {
    mid_mant: String,
    mid_exp: i64,
    rad_mant: String,
    rad_exp: i64,
    prec: u32,
}

impl Serialize for Ball {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        BallRepr {
            mid_mant: self.mid.mant().to_string(),
            mid_exp: self.mid.exp(),
            rad_mant: self.rad.mant().to_string(),
            rad_exp: self.rad.exp(),
            prec: self.prec,
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Ball {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        use std::str::FromStr;
        let repr = BallRepr::deserialize(deserializer)?;
        let mid = num_bigint::BigInt::from_str(&repr.mid_mant).map_err(serde::de::Error::custom)?;
        let rad = num_bigint::BigInt::from_str(&repr.rad_mant).map_err(serde::de::Error::custom)?;
        if rad.sign() == num_bigint::Sign::Minus {
            return Err(serde::de::Error::custom("negative radius"));
        }
        Ok(Ball {
            mid: Dyadic::new(mid, repr.mid_exp),
            rad: Dyadic::new(rad, repr.rad_exp),
            prec: repr.prec.max(MIN_PREC),
        })
    }
}
