//! Double-double floating point.
//!
//! A value is stored as an unevaluated sum `hi + lo` with `|lo| <= ulp(hi)/2`,
//! giving roughly 106 bits of mantissa. This is the working precision for
//! polynomial evaluation, phase reduction and boundary rechecks.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};

/// Mantissa bits carried by [`Dd`].
pub const DD_BITS: u32 = 106;

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Dd {
    pub hi: f64,
    pub lo: f64,
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    (s, err)
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

impl Dd {
    pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };
    pub const ONE: Dd = Dd { hi: 1.0, lo: 0.0 };

    pub const fn new(hi: f64, lo: f64) -> Self {
        Dd { hi, lo }
    }

    pub fn from_f64(x: f64) -> Self {
        Dd { hi: x, lo: 0.0 }
    }

    pub fn from_i64(x: i64) -> Self {
        let hi = x as f64;
        let lo = (x - hi as i64) as f64;
        let (hi, lo) = quick_two_sum(hi, lo);
        Dd { hi, lo }
    }

    /// Nearest double-double to an exact rational (error below 2^-104 relative).
    pub fn from_rational(r: &BigRational) -> Self {
        if r.is_zero() {
            return Dd::ZERO;
        }
        let hi = rational_to_f64(r);
        let rest = r - f64_to_rational(hi);
        let lo = rational_to_f64(&rest);
        let (hi, lo) = quick_two_sum(hi, lo);
        Dd { hi, lo }
    }

    /// Exact rational value of `hi + lo`.
    pub fn to_rational(self) -> BigRational {
        f64_to_rational(self.hi) + f64_to_rational(self.lo)
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    pub fn is_finite(self) -> bool {
        self.hi.is_finite() && self.lo.is_finite()
    }

    pub fn abs(self) -> Self {
        if self.hi < 0.0 || (self.hi == 0.0 && self.lo < 0.0) {
            -self
        } else {
            self
        }
    }

    pub fn floor(self) -> Self {
        let fh = self.hi.floor();
        if fh == self.hi {
            let (hi, lo) = quick_two_sum(fh, self.lo.floor());
            Dd { hi, lo }
        } else {
            Dd { hi: fh, lo: 0.0 }
        }
    }

    /// Fractional part in `[0, 1)`.
    pub fn fract(self) -> Self {
        let f = self - self.floor();
        // rounding can land exactly on 1
        if f.hi >= 1.0 {
            f - Dd::ONE
        } else {
            f
        }
    }

    pub fn mul_f64(self, b: f64) -> Self {
        let (p, e) = two_prod(self.hi, b);
        let e = e + self.lo * b;
        let (hi, lo) = quick_two_sum(p, e);
        Dd { hi, lo }
    }

    pub fn powi(self, n: u32) -> Self {
        let mut result = Dd::ONE;
        let mut base = self;
        let mut n = n;
        while n > 0 {
            if n & 1 == 1 {
                result = result * base;
            }
            base = base * base;
            n >>= 1;
        }
        result
    }

    pub fn total_cmp(&self, other: &Self) -> Ordering {
        let d = *self - *other;
        if d.hi > 0.0 || (d.hi == 0.0 && d.lo > 0.0) {
            Ordering::Greater
        } else if d.hi < 0.0 || (d.hi == 0.0 && d.lo < 0.0) {
            Ordering::Less
        } else {
            Ordering::Equal
        }
    }
}

impl Add for Dd {
    type Output = Dd;
    fn add(self, b: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, b.hi);
        let (t, f) = two_sum(self.lo, b.lo);
        let (s, e) = quick_two_sum(s, e + t);
        let (hi, lo) = quick_two_sum(s, e + f);
        Dd { hi, lo }
    }
}

impl Sub for Dd {
    type Output = Dd;
    fn sub(self, b: Dd) -> Dd {
        self + (-b)
    }
}

impl Neg for Dd {
    type Output = Dd;
    fn neg(self) -> Dd {
        Dd { hi: -self.hi, lo: -self.lo }
    }
}

impl Mul for Dd {
    type Output = Dd;
    fn mul(self, b: Dd) -> Dd {
        let (p, e) = two_prod(self.hi, b.hi);
        let e = e + (self.hi * b.lo + self.lo * b.hi);
        let (hi, lo) = quick_two_sum(p, e);
        Dd { hi, lo }
    }
}

impl PartialOrd for Dd {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        if !self.is_finite() || !other.is_finite() {
            return self.to_f64().partial_cmp(&other.to_f64());
        }
        Some(self.total_cmp(other))
    }
}

impl fmt::Display for Dd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_f64())
    }
}

/// Exact rational value of a finite double.
pub fn f64_to_rational(x: f64) -> BigRational {
    BigRational::from_float(x).unwrap_or_else(BigRational::zero)
}

/// Correctly rounded conversion of a rational to the nearest double.
pub fn rational_to_f64(r: &BigRational) -> f64 {
    if r.is_zero() {
        return 0.0;
    }
    let negative = r < &BigRational::zero();
    let r = if negative { -r.clone() } else { r.clone() };
    let num = r.numer();
    let den = r.denom();
    // scale so that the quotient has 64 significant bits, then let the
    // integer -> f64 conversion round
    let shift = num.bits() as i64 - den.bits() as i64 - 64;
    let (n, d) = if shift >= 0 {
        (num.clone(), den << (shift as usize))
    } else {
        (num << ((-shift) as usize), den.clone())
    };
    let q: BigInt = &n / &d;
    let rem = &n - &q * &d;
    // sticky bit keeps round-to-nearest honest
    let q = if rem.is_zero() { q } else { (q << 1) | BigInt::from(1) };
    let extra = if rem.is_zero() { 0 } else { 1 };
    let mant = q.to_f64().unwrap_or(f64::INFINITY);
    let v = mant * 2f64.powi((shift - extra) as i32);
    if negative {
        -v
    } else {
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;

    fn rat(p: i64, q: i64) -> BigRational {
        BigRational::new(BigInt::from(p), BigInt::from(q))
    }

    #[test]
    fn third_round_trips_to_106_bits() {
        let third = Dd::from_rational(&rat(1, 3));
        let err = third.to_rational() - rat(1, 3);
        let bound = f64_to_rational(2f64.powi(-106));
        assert!(num_traits::Signed::abs(&err) < bound);
    }

    #[test]
    fn fract_of_large_integer_plus_half() {
        let x = Dd::from_f64(1e15) + Dd::from_f64(0.5);
        assert_eq!(x.fract().to_f64(), 0.5);
        let y = Dd::from_f64(-2.25);
        assert_eq!(y.fract().to_f64(), 0.75);
    }

    #[test]
    fn product_keeps_low_bits() {
        // (2^30 + 1)^2 = 2^60 + 2^31 + 1 is not representable in one double
        let a = Dd::from_f64(1073741825.0);
        let sq = a * a;
        assert_eq!(sq.to_rational(), rat(1152921506754330625, 1));
    }

    #[test]
    fn rational_to_f64_rounds_correctly() {
        assert_eq!(rational_to_f64(&rat(1, 10)), 0.1);
        assert_eq!(rational_to_f64(&rat(-22, 7)), -22.0 / 7.0);
        assert_eq!(rational_to_f64(&rat(1, 1 << 40)), 2f64.powi(-40));
    }
}
