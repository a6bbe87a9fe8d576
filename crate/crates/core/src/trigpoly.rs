//! The ring spanned by `x^i cos(kx)` and `x^i sin(kx)` with exact rational
//! coefficients.
//!
//! Every element is stored as a map from harmonic `k >= 0` to a pair of
//! polynomials `(A_k, B_k)` representing `A_k(x) cos(kx) + B_k(x) sin(kx)`.
//! The representation is canonical: harmonics with both parts zero are never
//! stored and the `k = 0` sine part is always zero. Two elements are equal as
//! functions exactly when they are structurally equal.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec::Vec;
use core::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::eval::TrigEval;
use crate::poly::Poly;

/// Largest `n` accepted by [`spherical_fn`] unless a caller raises the cap.
pub const DEFAULT_MAX_N: usize = 16;

/// The polynomial parts multiplying `cos(kx)` and `sin(kx)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Harmonic {
    pub cos: Poly,
    pub sin: Poly,
}

impl Harmonic {
    fn is_zero(&self) -> bool {
        self.cos.is_zero() && self.sin.is_zero()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct TrigPoly {
    harmonics: BTreeMap<u32, Harmonic>,
}

fn half() -> BigRational {
    BigRational::new(BigInt::from(1), BigInt::from(2))
}

impl TrigPoly {
    pub fn zero() -> Self {
        TrigPoly::default()
    }

    pub fn one() -> Self {
        TrigPoly::from_poly(Poly::one())
    }

    pub fn constant(c: BigRational) -> Self {
        TrigPoly::from_poly(Poly::constant(c))
    }

    pub fn from_poly(p: Poly) -> Self {
        TrigPoly::from_parts(0, p, Poly::zero())
    }

    /// The identity function `x`.
    pub fn x() -> Self {
        TrigPoly::from_poly(Poly::monomial(BigRational::one(), 1))
    }

    /// `cos_part(x) cos(kx) + sin_part(x) sin(kx)`.
    pub fn from_parts(k: u32, cos_part: Poly, sin_part: Poly) -> Self {
        let mut t = TrigPoly::zero();
        t.insert(k, Harmonic {
            cos: cos_part,
            sin: sin_part,
        });
        t
    }

    /// Builds an element from arbitrary (possibly non-canonical) parts.
    pub fn from_harmonics<I: IntoIterator<Item = (u32, Harmonic)>>(parts: I) -> Self {
        let mut t = TrigPoly::zero();
        for (k, h) in parts {
            t.insert(k, h);
        }
        t
    }

    pub fn sin(k: u32) -> Self {
        TrigPoly::from_parts(k, Poly::zero(), Poly::one())
    }

    pub fn cos(k: u32) -> Self {
        TrigPoly::from_parts(k, Poly::one(), Poly::zero())
    }

    /// Adds a harmonic into the map, keeping the canonical form.
    fn insert(&mut self, k: u32, h: Harmonic) {
        let h = if k == 0 {
            // sin(0x) = 0
            Harmonic {
                cos: h.cos,
                sin: Poly::zero(),
            }
        } else {
            h
        };
        if h.is_zero() {
            return;
        }
        let merged = match self.harmonics.remove(&k) {
            Some(old) => Harmonic {
                cos: &old.cos + &h.cos,
                sin: &old.sin + &h.sin,
            },
            None => h,
        };
        if !merged.is_zero() {
            self.harmonics.insert(k, merged);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.harmonics.is_empty()
    }

    pub fn harmonics(&self) -> impl Iterator<Item = (u32, &Harmonic)> {
        self.harmonics.iter().map(|(&k, h)| (k, h))
    }

    pub fn harmonic(&self, k: u32) -> Option<&Harmonic> {
        self.harmonics.get(&k)
    }

    pub fn max_harmonic(&self) -> u32 {
        self.harmonics.keys().next_back().copied().unwrap_or(0)
    }

    /// Highest power of `x` appearing in any part.
    pub fn max_degree(&self) -> usize {
        self.harmonics
            .values()
            .flat_map(|h| [h.cos.degree(), h.sin.degree()])
            .flatten()
            .max()
            .unwrap_or(0)
    }

    pub fn scale(&self, c: &BigRational) -> TrigPoly {
        TrigPoly::from_harmonics(self.harmonics.iter().map(|(&k, h)| {
            (k, Harmonic {
                cos: h.cos.scale(c),
                sin: h.sin.scale(c),
            })
        }))
    }

    pub fn scale_int(&self, c: i64) -> TrigPoly {
        self.scale(&BigRational::from_integer(BigInt::from(c)))
    }

    pub fn mul_poly(&self, p: &Poly) -> TrigPoly {
        TrigPoly::from_harmonics(self.harmonics.iter().map(|(&k, h)| {
            (k, Harmonic {
                cos: &h.cos * p,
                sin: &h.sin * p,
            })
        }))
    }

    /// Multiply by `x^power`.
    pub fn shift(&self, power: usize) -> TrigPoly {
        TrigPoly {
            harmonics: self
                .harmonics
                .iter()
                .map(|(&k, h)| {
                    (k, Harmonic {
                        cos: h.cos.shift(power),
                        sin: h.sin.shift(power),
                    })
                })
                .collect(),
        }
    }

    /// Exact derivative:
    /// `(A cos kx + B sin kx)' = (A' + kB) cos kx + (B' - kA) sin kx`.
    pub fn diff(&self) -> TrigPoly {
        TrigPoly::from_harmonics(self.harmonics.iter().map(|(&k, h)| {
            let kq = BigRational::from_integer(BigInt::from(k));
            (k, Harmonic {
                cos: &h.cos.derivative() + &h.sin.scale(&kq),
                sin: &h.sin.derivative() - &h.cos.scale(&kq),
            })
        }))
    }

    pub fn nth_diff(&self, order: usize) -> TrigPoly {
        (0..order).fold(self.clone(), |acc, _| acc.diff())
    }

    /// `[f, f', ..., f^(m)]`.
    pub fn derivatives(&self, m: usize) -> Vec<TrigPoly> {
        let mut out = Vec::with_capacity(m + 1);
        out.push(self.clone());
        for i in 0..m {
            let next = out[i].diff();
            out.push(next);
        }
        out
    }

    /// Compiles the element for repeated evaluation.
    pub fn compile(&self) -> TrigEval {
        TrigEval::new(self)
    }

    /// Pointwise value with double-double accumulation. Compiles on every
    /// call; use [`TrigPoly::compile`] for grids.
    pub fn eval(&self, x: f64) -> Result<f64> {
        crate::eval::eval_once(self, x)
    }

    /// Exact Maclaurin coefficients `c_0..c_{terms-1}`.
    pub fn maclaurin(&self, terms: usize) -> Vec<BigRational> {
        crate::eval::maclaurin_exact(self, terms)
    }

    /// Exact `f^(i)(0)`.
    pub fn derivative_at_zero(&self, i: usize) -> BigRational {
        let c = self.maclaurin(i + 1).pop().unwrap_or_else(BigRational::zero);
        let fact: BigInt = (1..=i as u64).map(BigInt::from).product();
        c * BigRational::from_integer(fact)
    }

    /// Order of the zero at `x = 0` (index of the first nonzero Maclaurin
    /// coefficient); `None` for the zero element.
    pub fn order_at_zero(&self) -> Option<usize> {
        if self.is_zero() {
            return None;
        }
        let mut terms = 16;
        loop {
            let c = self.maclaurin(terms);
            if let Some(i) = c.iter().position(|c| !c.is_zero()) {
                return Some(i);
            }
            terms *= 2;
        }
    }
}

/// Product-to-sum on a single pair of harmonics.
fn mul_harmonics(out: &mut TrigPoly, j: u32, a: &Harmonic, k: u32, b: &Harmonic) {
    let h = half();
    let sum = j + k;
    let (diff, flip) = if j >= k { (j - k, false) } else { (k - j, true) };
    // cos j cos k = 1/2 cos(j-k) + 1/2 cos(j+k)
    // sin j sin k = 1/2 cos(j-k) - 1/2 cos(j+k)
    // sin j cos k = 1/2 sin(j+k) + 1/2 sin(j-k)
    // cos j sin k = 1/2 sin(j+k) - 1/2 sin(j-k)
    let cc = &a.cos * &b.cos;
    let ss = &a.sin * &b.sin;
    let sc = &a.sin * &b.cos;
    let cs = &a.cos * &b.sin;

    let cos_diff = (&cc + &ss).scale(&h);
    let cos_sum = (&cc - &ss).scale(&h);
    let sin_sum = (&sc + &cs).scale(&h);
    // sin((j-k)x) = -sin((k-j)x) when j < k
    let mut sin_diff = (&sc - &cs).scale(&h);
    if flip {
        sin_diff = -&sin_diff;
    }
    out.insert(diff, Harmonic {
        cos: cos_diff,
        sin: sin_diff,
    });
    out.insert(sum, Harmonic {
        cos: cos_sum,
        sin: sin_sum,
    });
}

impl Add for &TrigPoly {
    type Output = TrigPoly;
    fn add(self, rhs: &TrigPoly) -> TrigPoly {
        let mut out = self.clone();
        for (&k, h) in &rhs.harmonics {
            out.insert(k, h.clone());
        }
        out
    }
}

impl Neg for &TrigPoly {
    type Output = TrigPoly;
    fn neg(self) -> TrigPoly {
        TrigPoly {
            harmonics: self
                .harmonics
                .iter()
                .map(|(&k, h)| {
                    (k, Harmonic {
                        cos: -&h.cos,
                        sin: -&h.sin,
                    })
                })
                .collect(),
        }
    }
}

impl Sub for &TrigPoly {
    type Output = TrigPoly;
    fn sub(self, rhs: &TrigPoly) -> TrigPoly {
        self + &(-rhs)
    }
}

impl Mul for &TrigPoly {
    type Output = TrigPoly;
    fn mul(self, rhs: &TrigPoly) -> TrigPoly {
        let mut out = TrigPoly::zero();
        for (&j, a) in &self.harmonics {
            for (&k, b) in &rhs.harmonics {
                mul_harmonics(&mut out, j, a, k, b);
            }
        }
        out
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr for TrigPoly {
            type Output = TrigPoly;
            fn $m(self, rhs: TrigPoly) -> TrigPoly {
                (&self).$m(&rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

impl Neg for TrigPoly {
    type Output = TrigPoly;
    fn neg(self) -> TrigPoly {
        -&self
    }
}

/// `f_n(x) = sqrt(pi/2) x^(n+1/2) J_(n+1/2)(x)` as an exact ring element,
/// capped at [`DEFAULT_MAX_N`].
pub fn spherical_fn(n: usize) -> Result<TrigPoly> {
    spherical_fn_with_max(n, DEFAULT_MAX_N)
}

/// [`spherical_fn`] with an explicit cap on `n`.
///
/// Built by the three-term recurrence `f_0 = sin x`,
/// `f_1 = sin x - x cos x`, `f_(k+1) = (2k+1) f_k - x^2 f_(k-1)`.
pub fn spherical_fn_with_max(n: usize, max_n: usize) -> Result<TrigPoly> {
    if n > max_n {
        return Err(Error::usage(format!(
            "spherical function index n = {n} exceeds the configured maximum {max_n}"
        )));
    }
    Ok(spherical_family(n).pop().expect("family is never empty"))
}

/// `[f_0, ..., f_n]`, uncapped.
pub fn spherical_family(n: usize) -> Vec<TrigPoly> {
    let x2 = Poly::monomial(BigRational::one(), 2);
    let mut out = Vec::with_capacity(n + 1);
    out.push(TrigPoly::sin(1));
    if n == 0 {
        return out;
    }
    out.push(TrigPoly::from_parts(1, Poly::from_i64s(&[0, -1]), Poly::one()));
    for k in 1..n {
        let next = &out[k].scale_int(2 * k as i64 + 1) - &out[k - 1].mul_poly(&x2);
        out.push(next);
    }
    out
}
