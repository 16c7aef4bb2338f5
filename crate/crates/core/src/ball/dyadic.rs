//! Exact dyadic rationals `mant * 2^exp`, the substrate for ball arithmetic.
//!
//! Every operation here is exact except the explicit rounding entry points,
//! which return a rigorous error bound alongside the rounded value. The
//! canonical form keeps the mantissa odd (or zero), so `Eq` is structural.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

/// Ceiling division for i64 with positive divisor.
fn div_ceil_i64(a: i64, b: i64) -> i64 {
    debug_assert!(b > 0);
    (a + b - 1).div_euclid(b)
}

#[derive(Clone, PartialEq, Eq)]
pub struct Dyadic {
    mant: BigInt,
    exp: i64,
}

impl Dyadic {
    pub fn new(mant: BigInt, exp: i64) -> Self {
        let mut d = Dyadic { mant, exp };
        d.normalize();
        d
    }

    pub fn zero() -> Self {
        Dyadic { mant: BigInt::zero(), exp: 0 }
    }

    pub fn one() -> Self {
        Dyadic { mant: BigInt::one(), exp: 0 }
    }

    pub fn from_int(n: i64) -> Self {
        Dyadic::new(BigInt::from(n), 0)
    }

    pub fn from_bigint(n: BigInt) -> Self {
        Dyadic::new(n, 0)
    }

    /// `2^exp`.
    pub fn pow2(exp: i64) -> Self {
        Dyadic { mant: BigInt::one(), exp }
    }

    fn normalize(&mut self) {
        if self.mant.is_zero() {
            self.exp = 0;
            return;
        }
        if let Some(tz) = self.mant.trailing_zeros() {
            if tz > 0 {
                self.mant >>= tz;
                self.exp += tz as i64;
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        self.mant.is_zero()
    }

    pub fn is_negative(&self) -> bool {
        self.mant.is_negative()
    }

    pub fn is_positive(&self) -> bool {
        self.mant.is_positive()
    }

    pub fn mant(&self) -> &BigInt {
        &self.mant
    }

    pub fn exp(&self) -> i64 {
        self.exp
    }

    /// Mantissa bit length (0 for zero).
    pub fn bits(&self) -> u64 {
        self.mant.magnitude().bits()
    }

    pub fn add(&self, other: &Self) -> Self {
        if self.is_zero() {
            return other.clone();
        }
        if other.is_zero() {
            return self.clone();
        }
        let e = self.exp.min(other.exp);
        let a = &self.mant << (self.exp - e) as u64;
        let b = &other.mant << (other.exp - e) as u64;
        Dyadic::new(a + b, e)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        Dyadic { mant: -self.mant.clone(), exp: self.exp }
    }

    pub fn abs(&self) -> Self {
        Dyadic { mant: self.mant.abs(), exp: self.exp }
    }

    pub fn mul(&self, other: &Self) -> Self {
        if self.is_zero() || other.is_zero() {
            return Dyadic::zero();
        }
        Dyadic { mant: &self.mant * &other.mant, exp: self.exp + other.exp }
    }

    /// Exact halving.
    pub fn half(&self) -> Self {
        if self.is_zero() {
            return Dyadic::zero();
        }
        Dyadic { mant: self.mant.clone(), exp: self.exp - 1 }
    }

    /// Exact non-negative integer power.
    pub fn pow_u(&self, j: u32) -> Self {
        if j == 0 {
            return Dyadic::one();
        }
        Dyadic::new(self.mant.pow(j), self.exp * j as i64)
    }

    /// Round to at most `prec` mantissa bits, to nearest. Returns the rounded
    /// value and a bound on the absolute rounding error.
    pub fn round_nearest(&self, prec: u32) -> (Self, Self) {
        let bits = self.bits();
        if bits <= prec as u64 {
            return (self.clone(), Dyadic::zero());
        }
        let drop = bits - prec as u64;
        let mag = self.mant.magnitude();
        let mut q: BigInt = BigInt::from(mag >> drop);
        let rem = BigInt::from(mag.clone()) - (&q << drop);
        // round half away from zero on the magnitude
        if &rem << 1u8 >= BigInt::one() << drop {
            q += 1;
        }
        if self.mant.is_negative() {
            q = -q;
        }
        let err = Dyadic::pow2(self.exp + drop as i64 - 1);
        (Dyadic::new(q, self.exp + drop as i64), err)
    }

    /// Round a non-negative value up (away from zero) to at most `bits`
    /// mantissa bits. Used for radii, which only ever need to grow.
    pub fn round_up_mag(&self, bits: u32) -> Self {
        debug_assert!(!self.is_negative());
        let nbits = self.bits();
        if nbits <= bits as u64 {
            return self.clone();
        }
        let drop = nbits - bits as u64;
        let mag = self.mant.magnitude();
        let mut q: BigInt = BigInt::from(mag >> drop);
        if !(BigInt::from(mag.clone()) - (&q << drop)).is_zero() {
            q += 1;
        }
        Dyadic::new(q, self.exp + drop as i64)
    }

    pub fn floor_bigint(&self) -> BigInt {
        if self.exp >= 0 {
            &self.mant << self.exp as u64
        } else {
            let d = BigInt::one() << (-self.exp) as u64;
            self.mant.div_floor(&d)
        }
    }

    pub fn ceil_bigint(&self) -> BigInt {
        -self.neg().floor_bigint()
    }

    /// Largest dyadic with at least `prec` significant bits such that
    /// `result^k <= self`. Requires `self > 0`. Also reports whether the
    /// result is exact and the spacing to the next representable value.
    pub fn root_floor(&self, k: u32, prec: u32) -> (Self, bool, Self) {
        assert!(self.is_positive(), "root of non-positive dyadic");
        assert!(k >= 1);
        let bits = self.bits() as i64;
        // output scale 2^-j: need self * 2^(k*j) integral and wide enough
        let want = (k as i64) * (prec as i64 + 2);
        let j_bits = div_ceil_i64(want - bits - self.exp, k as i64);
        let j_int = div_ceil_i64(-self.exp, k as i64);
        let j = j_bits.max(j_int).max(0);
        let shift = self.exp + k as i64 * j;
        debug_assert!(shift >= 0);
        let n: BigInt = &self.mant << shift as u64;
        let r = n.nth_root(k);
        let exact = r.pow(k) == n;
        ((Dyadic::new(r, -j)), exact, Dyadic::pow2(-j))
    }

    /// Smallest representable value at the working scale with
    /// `result^k >= self`.
    pub fn root_ceil(&self, k: u32, prec: u32) -> Self {
        let (f, exact, ulp) = self.root_floor(k, prec);
        if exact {
            f
        } else {
            f.add(&ulp)
        }
    }
}

impl PartialOrd for Dyadic {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Dyadic {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self.mant.sign(), other.mant.sign()) {
            (a, b) if a != b => a.cmp(&b),
            (num_bigint::Sign::NoSign, _) => Ordering::Equal,
            _ => {
                let e = self.exp.min(other.exp);
                let a = &self.mant << (self.exp - e) as u64;
                let b = &other.mant << (other.exp - e) as u64;
                a.cmp(&b)
            }
        }
    }
}

impl fmt::Debug for Dyadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}*2^{}", self.mant, self.exp)
    }
}
