//! Dense univariate polynomials over the rationals.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::dd::{rational_to_f64, Dd};

/// Polynomial in `x` with exact rational coefficients; `coeffs[i]` multiplies
/// `x^i`. Trailing zeros are always trimmed, so the zero polynomial is the
/// empty vector and structural equality is equality of functions.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Poly {
    coeffs: Vec<BigRational>,
}

impl Poly {
    pub fn zero() -> Self {
        Poly { coeffs: Vec::new() }
    }

    pub fn one() -> Self {
        Poly::constant(BigRational::one())
    }

    pub fn constant(c: BigRational) -> Self {
        Poly::from_coeffs(vec![c])
    }

    /// `c * x^power`.
    pub fn monomial(c: BigRational, power: usize) -> Self {
        let mut coeffs = vec![BigRational::zero(); power + 1];
        coeffs[power] = c;
        Poly::from_coeffs(coeffs)
    }

    pub fn from_coeffs(mut coeffs: Vec<BigRational>) -> Self {
        while coeffs.last().is_some_and(Zero::is_zero) {
            coeffs.pop();
        }
        Poly { coeffs }
    }

    pub fn from_i64s(coeffs: &[i64]) -> Self {
        Poly::from_coeffs(
            coeffs
                .iter()
                .map(|&c| BigRational::from_integer(BigInt::from(c)))
                .collect(),
        )
    }

    pub fn coeffs(&self) -> &[BigRational] {
        &self.coeffs
    }

    pub fn coeff(&self, i: usize) -> BigRational {
        self.coeffs.get(i).cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree, or `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn scale(&self, c: &BigRational) -> Poly {
        if c.is_zero() {
            return Poly::zero();
        }
        Poly {
            coeffs: self.coeffs.iter().map(|a| a * c).collect(),
        }
    }

    /// Multiply by `x^power`.
    pub fn shift(&self, power: usize) -> Poly {
        if self.is_zero() {
            return Poly::zero();
        }
        let mut coeffs = vec![BigRational::zero(); power];
        coeffs.extend(self.coeffs.iter().cloned());
        Poly { coeffs }
    }

    pub fn derivative(&self) -> Poly {
        Poly::from_coeffs(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, c)| c * BigRational::from_integer(BigInt::from(i)))
                .collect(),
        )
    }

    /// Largest |coefficient| as a double, for magnitude budgets.
    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs
            .iter()
            .map(|c| rational_to_f64(&c.abs()))
            .fold(0.0, f64::max)
    }

    /// Double-double Horner evaluation; also returns `sum |a_i| |x|^i`.
    pub fn eval_dd(&self, x: Dd) -> (Dd, f64) {
        let ax = x.to_f64().abs();
        let mut acc = Dd::ZERO;
        let mut mag = 0.0;
        for c in self.coeffs.iter().rev() {
            let c = Dd::from_rational(c);
            acc = acc * x + c;
            mag = mag * ax + c.hi.abs();
        }
        (acc, mag)
    }
}

impl Add for &Poly {
    type Output = Poly;
    fn add(self, rhs: &Poly) -> Poly {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        Poly::from_coeffs((0..n).map(|i| self.coeff(i) + rhs.coeff(i)).collect())
    }
}

impl Sub for &Poly {
    type Output = Poly;
    fn sub(self, rhs: &Poly) -> Poly {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        Poly::from_coeffs((0..n).map(|i| self.coeff(i) - rhs.coeff(i)).collect())
    }
}

impl Neg for &Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        Poly {
            coeffs: self.coeffs.iter().map(|c| -c).collect(),
        }
    }
}

impl Mul for &Poly {
    type Output = Poly;
    fn mul(self, rhs: &Poly) -> Poly {
        if self.is_zero() || rhs.is_zero() {
            return Poly::zero();
        }
        let mut out = vec![BigRational::zero(); self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in rhs.coeffs.iter().enumerate() {
                if !b.is_zero() {
                    out[i + j] += a * b;
                }
            }
        }
        Poly::from_coeffs(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn canonical_form_trims_trailing_zeros() {
        let p = Poly::from_i64s(&[1, 2, 0, 0]);
        assert_eq!(p.degree(), Some(1));
        let z = &p - &p;
        assert!(z.is_zero());
        assert_eq!(z, Poly::zero());
    }

    #[test]
    fn derivative_and_product() {
        // (1 + x)(1 - x) = 1 - x^2
        let a = Poly::from_i64s(&[1, 1]);
        let b = Poly::from_i64s(&[1, -1]);
        assert_eq!(&a * &b, Poly::from_i64s(&[1, 0, -1]));
        assert_eq!((&a * &b).derivative(), Poly::from_i64s(&[0, -2]));
    }

    #[test]
    fn horner_in_double_double() {
        let p = Poly::from_coeffs(vec![q(1, 3), q(-1, 2), q(1, 1)]);
        let (v, mag) = p.eval_dd(Dd::new(2.0));
        assert!((v.to_f64() - (1.0 / 3.0 - 1.0 + 4.0)).abs() < 1e-15);
        assert!((mag - (1.0 / 3.0 + 1.0 + 4.0)).abs() < 1e-15);
    }
}
