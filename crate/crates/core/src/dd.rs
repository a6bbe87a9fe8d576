//! Double-double arithmetic.
//!
//! A [`Dd`] is an unevaluated sum `hi + lo` with `|lo| <= ulp(hi)/2`, giving
//! roughly 106 bits of significand. Every evaluator in the crate accumulates
//! in this type: the trig-polynomial closed forms and the Bessel series both
//! cancel heavily, and plain `f64` loses all digits there.

use core::cmp::Ordering;
use core::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};

/// Unit roundoff of the double-double format.
pub const DD_EPS: f64 = 4.93e-32;

#[inline]
pub fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let e = (a - (s - bb)) + (b - bb);
    (s, e)
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let e = b - (s - a);
    (s, e)
}

#[inline]
pub fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    let e = libm::fma(a, b, -p);
    (p, e)
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Dd {
    pub hi: f64,
    pub lo: f64,
}

// pi/2 split into three doubles.
const HALF_PI_1: f64 = 1.5707963267948966;
const HALF_PI_2: f64 = 6.123233995736766e-17;
const HALF_PI_3: f64 = -1.4973849048591698e-33;

impl Dd {
    pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };
    pub const ONE: Dd = Dd { hi: 1.0, lo: 0.0 };

    #[inline]
    pub const fn new(x: f64) -> Self {
        Dd { hi: x, lo: 0.0 }
    }

    #[inline]
    fn renorm(hi: f64, lo: f64) -> Self {
        let (hi, lo) = quick_two_sum(hi, lo);
        Dd { hi, lo }
    }

    #[inline]
    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    #[inline]
    pub fn abs(self) -> Self {
        if self.hi < 0.0 || (self.hi == 0.0 && self.lo < 0.0) {
            -self
        } else {
            self
        }
    }

    #[inline]
    pub fn is_finite(self) -> bool {
        self.hi.is_finite() && self.lo.is_finite()
    }

    #[inline]
    pub fn mul_f64(self, b: f64) -> Self {
        let (p, e) = two_prod(self.hi, b);
        let e = libm::fma(self.lo, b, e);
        Dd::renorm(p, e)
    }

    #[inline]
    pub fn add_f64(self, b: f64) -> Self {
        let (s, e) = two_sum(self.hi, b);
        Dd::renorm(s, e + self.lo)
    }

    #[inline]
    pub fn sqr(self) -> Self {
        self * self
    }

    /// `self * (x)^k` for a small non-negative integer exponent.
    pub fn powi(self, k: u32) -> Self {
        let mut base = self;
        let mut acc = Dd::ONE;
        let mut e = k;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * base;
            }
            base = base.sqr();
            e >>= 1;
        }
        acc
    }

    /// Nearest double-double to an exact rational.
    pub fn from_rational(r: &BigRational) -> Self {
        let hi = r.to_f64().unwrap_or(f64::NAN);
        if !hi.is_finite() || hi == 0.0 {
            return Dd::new(hi);
        }
        let rest = match BigRational::from_float(hi) {
            Some(h) => r - h,
            None => return Dd::new(hi),
        };
        let lo = rest.to_f64().unwrap_or(0.0);
        Dd::renorm(hi, lo)
    }

    /// Exact value of an integer, rounded to double-double.
    pub fn from_bigint(n: &BigInt) -> Self {
        Dd::from_rational(&BigRational::from_integer(n.clone()))
    }

    /// Simultaneous sine and cosine.
    ///
    /// The argument is reduced by a three-term pi/2, so the result keeps
    /// full double-double accuracy for |x| up to about 1e5.
    pub fn sin_cos(self) -> (Dd, Dd) {
        if self.hi == 0.0 {
            return (self, Dd::ONE);
        }
        let m = libm::round(self.hi / HALF_PI_1);
        let mut r = self;
        for c in [HALF_PI_1, HALF_PI_2, HALF_PI_3] {
            let (p, e) = two_prod(m, c);
            r = r - Dd { hi: p, lo: e };
        }
        let (s, c) = sin_cos_taylor(r);
        let quadrant = (m as i64).rem_euclid(4);
        match quadrant {
            0 => (s, c),
            1 => (c, -s),
            2 => (-s, -c),
            _ => (-c, s),
        }
    }

    /// Compensated sum of an iterator of doubles.
    pub fn sum_f64<I: IntoIterator<Item = f64>>(it: I) -> Dd {
        it.into_iter().fold(Dd::ZERO, |acc, x| acc.add_f64(x))
    }
}

/// Taylor series on |r| <= pi/4 (plus reduction slack).
fn sin_cos_taylor(r: Dd) -> (Dd, Dd) {
    let r2 = r.sqr();
    // sin: r - r^3/3! + ...
    let mut term = r;
    let mut sin = r;
    let mut k = 1.0;
    loop {
        term = -(term * r2) / Dd::new((k + 1.0) * (k + 2.0));
        k += 2.0;
        sin += term;
        if term.hi.abs() < 1e-36 * sin.hi.abs().max(1e-300) || k > 60.0 {
            break;
        }
    }
    let mut term = Dd::ONE;
    let mut cos = Dd::ONE;
    let mut k = 0.0;
    loop {
        term = -(term * r2) / Dd::new((k + 1.0) * (k + 2.0));
        k += 2.0;
        cos += term;
        if term.hi.abs() < 1e-36 || k > 60.0 {
            break;
        }
    }
    (sin, cos)
}

impl From<f64> for Dd {
    fn from(x: f64) -> Self {
        Dd::new(x)
    }
}

impl Neg for Dd {
    type Output = Dd;
    #[inline]
    fn neg(self) -> Dd {
        Dd {
            hi: -self.hi,
            lo: -self.lo,
        }
    }
}

impl Add for Dd {
    type Output = Dd;
    #[inline]
    fn add(self, b: Dd) -> Dd {
        let (s1, s2) = two_sum(self.hi, b.hi);
        let (t1, t2) = two_sum(self.lo, b.lo);
        let s2 = s2 + t1;
        let (s1, s2) = quick_two_sum(s1, s2);
        let s2 = s2 + t2;
        Dd::renorm(s1, s2)
    }
}

impl Sub for Dd {
    type Output = Dd;
    #[inline]
    fn sub(self, b: Dd) -> Dd {
        self + (-b)
    }
}

impl Mul for Dd {
    type Output = Dd;
    #[inline]
    fn mul(self, b: Dd) -> Dd {
        let (p, e) = two_prod(self.hi, b.hi);
        let e = libm::fma(self.hi, b.lo, e);
        let e = libm::fma(self.lo, b.hi, e);
        Dd::renorm(p, e)
    }
}

impl Div for Dd {
    type Output = Dd;
    fn div(self, b: Dd) -> Dd {
        let q1 = self.hi / b.hi;
        let r = self - b.mul_f64(q1);
        let q2 = r.hi / b.hi;
        let r = r - b.mul_f64(q2);
        let q3 = r.hi / b.hi;
        let (q1, q2) = quick_two_sum(q1, q2);
        Dd { hi: q1, lo: q2 }.add_f64(q3)
    }
}

impl AddAssign for Dd {
    #[inline]
    fn add_assign(&mut self, b: Dd) {
        *self = *self + b;
    }
}

impl SubAssign for Dd {
    #[inline]
    fn sub_assign(&mut self, b: Dd) {
        *self = *self - b;
    }
}

impl MulAssign for Dd {
    #[inline]
    fn mul_assign(&mut self, b: Dd) {
        *self = *self * b;
    }
}

impl PartialOrd for Dd {
    fn partial_cmp(&self, other: &Dd) -> Option<Ordering> {
        match self.hi.partial_cmp(&other.hi) {
            Some(Ordering::Equal) => self.lo.partial_cmp(&other.lo),
            ord => ord,
        }
    }
}

/// Exact rational -> f64 rounding helper used when a plain double suffices.
pub fn rational_to_f64(r: &BigRational) -> f64 {
    if r.is_zero() {
        return 0.0;
    }
    r.to_f64().unwrap_or(if r.is_negative() {
        f64::NEG_INFINITY
    } else {
        f64::INFINITY
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exact(d: Dd) -> BigRational {
        BigRational::from_float(d.hi).unwrap() + BigRational::from_float(d.lo).unwrap()
    }

    #[test]
    fn product_of_doubles_is_exact() {
        let a = Dd::new(0.1);
        let b = Dd::new(3.0e-7);
        let p = a * b;
        let want = BigRational::from_float(0.1).unwrap() * BigRational::from_float(3.0e-7).unwrap();
        let err = (exact(p) - &want).abs() / want.abs();
        assert!(err.to_f64().unwrap() < 1e-31);
    }

    #[test]
    fn division_round_trips() {
        let a = Dd::new(1.0);
        let b = Dd::new(3.0);
        let q = a / b;
        let back = q * b;
        assert!((back - Dd::ONE).hi.abs() < 1e-31);
    }

    #[test]
    fn sin_cos_matches_libm_and_pythagoras() {
        for &x in &[0.3, 1.0, 2.5, -4.0, 17.25, 49.0, 210.0] {
            let (s, c) = Dd::new(x).sin_cos();
            assert!((s.to_f64() - libm::sin(x)).abs() < 2e-16);
            assert!((c.to_f64() - libm::cos(x)).abs() < 2e-16);
            let one = s.sqr() + c.sqr();
            assert!((one - Dd::ONE).hi.abs() < 1e-30, "x={x}");
        }
    }

    #[test]
    fn sin_at_pi_resolves_below_double_precision() {
        // The double nearest pi differs from pi by about 1.2246e-16, which is
        // exactly what sin returns there.
        let (s, _) = Dd::new(core::f64::consts::PI).sin_cos();
        assert!((s.hi - 1.2246467991473532e-16).abs() < 1e-30);
    }

    #[test]
    fn rational_conversion_carries_the_low_word() {
        let third = BigRational::new(BigInt::from(1), BigInt::from(3));
        let d = Dd::from_rational(&third);
        let err = (exact(d) - &third).abs();
        assert!(err.to_f64().unwrap() < 1e-32);
    }
}
