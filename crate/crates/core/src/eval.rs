//! Extended-precision evaluation of [`TrigPoly`] elements.
//!
//! Two routes are available and the cheaper accurate one is chosen per point:
//!
//! * the closed form `sum_k A_k(x) cos kx + B_k(x) sin kx`, accumulated in
//!   double-double with double-double sine and cosine;
//! * the Maclaurin series, whose coefficients are computed exactly from the
//!   rational parts and then rounded to double-double.
//!
//! The closed form cancels catastrophically near `x = 0` (for `f_8` the
//! value at `x = 0.1` is 30 orders of magnitude below the individual
//! terms), while the series has no cancellation there. Each route returns a
//! rounding-error bound, so the switch is driven by measured conditioning.

use alloc::vec::Vec;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::dd::{Dd, DD_EPS};
use crate::error::{Error, Result};
use crate::trigpoly::TrigPoly;

/// Below this value of `k_max |x|` the series is always used.
const SERIES_ALWAYS_KX: f64 = 8.0;
/// Above this value of `k_max |x|` the series is never used.
const SERIES_MAX_KX: f64 = 24.0;
/// Closed-form results with a relative error bound under this are accepted
/// without trying the series.
const CLOSED_FORM_ACCEPT: f64 = 1e-20;
/// Quotients `f(x)/x^p` switch to the shifted series below this radius.
pub const MACLAURIN_RADIUS: f64 = 1e-2;

/// Value with a bound on its accumulated rounding error.
#[derive(Debug, Clone, Copy)]
pub struct Evaluation {
    pub value: Dd,
    /// Absolute error bound.
    pub error: f64,
    /// `sum |term|` of the route used; the natural cancellation scale.
    pub magnitude: f64,
}

impl Evaluation {
    pub fn rel_error(&self) -> f64 {
        let v = self.value.hi.abs();
        if v == 0.0 {
            f64::INFINITY
        } else {
            self.error / v
        }
    }
}

#[derive(Debug, Clone)]
struct Part {
    k: u32,
    cos: Vec<Dd>,
    sin: Vec<Dd>,
}

#[derive(Debug, Clone)]
struct Series {
    /// Index of the first nonzero coefficient (order of the zero at 0).
    start: usize,
    /// `c_start, c_(start+1), ...`
    coeffs: Vec<Dd>,
}

/// A [`TrigPoly`] prepared for repeated evaluation. Immutable and `Sync`.
#[derive(Debug, Clone)]
pub struct TrigEval {
    parts: Vec<Part>,
    max_k: u32,
    degree: usize,
    series: Option<Series>,
}

impl TrigEval {
    pub fn new(tp: &TrigPoly) -> Self {
        let mut ev = TrigEval::closed_form_only(tp);
        ev.series = build_series(tp);
        ev
    }

    pub(crate) fn closed_form_only(tp: &TrigPoly) -> Self {
        let parts = tp
            .harmonics()
            .map(|(k, h)| Part {
                k,
                cos: h.cos.coeffs().iter().map(Dd::from_rational).collect(),
                sin: h.sin.coeffs().iter().map(Dd::from_rational).collect(),
            })
            .collect();
        TrigEval {
            parts,
            max_k: tp.max_harmonic(),
            degree: tp.max_degree(),
            series: None,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.parts.is_empty()
    }

    /// Order of the zero at the origin, when the series has been built.
    pub fn order_at_zero(&self) -> Option<usize> {
        self.series.as_ref().map(|s| s.start)
    }

    fn kx(&self, x: f64) -> f64 {
        f64::from(self.max_k.max(1)) * x.abs()
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        Ok(self.eval_detail(x)?.value.to_f64())
    }

    pub fn eval_dd(&self, x: f64) -> Result<Dd> {
        Ok(self.eval_detail(x)?.value)
    }

    pub fn eval_detail(&self, x: f64) -> Result<Evaluation> {
        if !x.is_finite() {
            return Err(Error::usage("evaluation point must be finite"));
        }
        if self.is_zero() {
            return Ok(Evaluation {
                value: Dd::ZERO,
                error: 0.0,
                magnitude: 0.0,
            });
        }
        let kx = self.kx(x);
        let out = match &self.series {
            Some(s) if kx <= SERIES_ALWAYS_KX => series_eval(s, x, 0),
            _ => {
                let closed = self.closed_form(x);
                match &self.series {
                    Some(s) if kx <= SERIES_MAX_KX && closed.rel_error() > CLOSED_FORM_ACCEPT => {
                        let ser = series_eval(s, x, 0);
                        if ser.error < closed.error {
                            ser
                        } else {
                            closed
                        }
                    }
                    _ => closed,
                }
            }
        };
        check_finite(out, x)
    }

    /// `f(x) / x^power`, continuous through `x = 0` when the zero of `f` at
    /// the origin has order at least `power`.
    pub fn eval_over_power(&self, x: f64, power: usize) -> Result<f64> {
        if self.is_zero() {
            return Ok(0.0);
        }
        let Some(s) = &self.series else {
            if x == 0.0 {
                return Err(Error::usage("series unavailable for evaluation at the origin"));
            }
            let e = self.eval_detail(x)?;
            return Ok((e.value / Dd::new(x).powi(power as u32)).to_f64());
        };
        if x.abs() < MACLAURIN_RADIUS || self.kx(x) <= SERIES_ALWAYS_KX {
            if s.start < power && x == 0.0 {
                return Err(Error::numerical(alloc::format!(
                    "f(x)/x^{power} has a pole at 0 (zero of order {})",
                    s.start
                )));
            }
            if s.start >= power {
                let e = check_finite(series_eval(s, x, power), x)?;
                return Ok(e.value.to_f64());
            }
        }
        let e = self.eval_detail(x)?;
        Ok((e.value / Dd::new(x).powi(power as u32)).to_f64())
    }

    fn closed_form(&self, x: f64) -> Evaluation {
        let xd = Dd::new(x);
        let ax = x.abs();
        let (s1, c1) = xd.sin_cos();
        // cos(kx), sin(kx) by the angle-addition recurrence
        let mut ck = Dd::ONE;
        let mut sk = Dd::ZERO;
        let mut kcur = 0u32;
        let mut value = Dd::ZERO;
        let mut mag = 0.0;
        for part in &self.parts {
            while kcur < part.k {
                let c = ck * c1 - sk * s1;
                let s = sk * c1 + ck * s1;
                ck = c;
                sk = s;
                kcur += 1;
            }
            let (a, am) = horner(&part.cos, xd, ax);
            let (b, bm) = horner(&part.sin, xd, ax);
            value += a * ck + b * sk;
            mag += am + bm;
        }
        let ops = (self.degree + 2 * self.max_k as usize + 8) as f64;
        Evaluation {
            value,
            error: ops * DD_EPS * mag,
            magnitude: mag,
        }
    }
}

fn check_finite(e: Evaluation, x: f64) -> Result<Evaluation> {
    if e.value.is_finite() && e.magnitude.is_finite() {
        Ok(e)
    } else {
        Err(Error::numerical(alloc::format!(
            "intermediate magnitude overflow evaluating at x = {x}"
        )))
    }
}

fn horner(coeffs: &[Dd], x: Dd, ax: f64) -> (Dd, f64) {
    let mut acc = Dd::ZERO;
    let mut mag = 0.0;
    for c in coeffs.iter().rev() {
        acc = acc * x + *c;
        mag = mag * ax + c.hi.abs();
    }
    (acc, mag)
}

/// `sum_m c_m x^(m - shift)` over the stored coefficients.
fn series_eval(s: &Series, x: f64, shift: usize) -> Evaluation {
    let xd = Dd::new(x);
    let ax = x.abs();
    let mut acc = Dd::ZERO;
    let mut mag = 0.0;
    for c in s.coeffs.iter().rev() {
        acc = acc * xd + *c;
        mag = mag * ax + c.hi.abs();
    }
    let lead = s.start - shift;
    let xp = xd.powi(lead as u32);
    let value = acc * xp;
    let mag = mag * libm::pow(ax, lead as f64);
    let last = s.coeffs.last().map_or(0.0, |c| c.hi.abs())
        * libm::pow(ax, (s.start + s.coeffs.len() - 1 - shift) as f64);
    Evaluation {
        value,
        error: (s.coeffs.len() as f64 + 4.0) * DD_EPS * mag + 2.0 * last,
        magnitude: mag,
    }
}

/// Successive exact Maclaurin coefficients of a ring element, computed over
/// the integers: `c_m = S_m / (D m!)` where `D` clears every denominator.
struct MaclaurinGen {
    /// (k, cos numerators, sin numerators), each scaled by `denom`.
    parts: Vec<(u32, Vec<BigInt>, Vec<BigInt>)>,
    denom: BigInt,
    degree: usize,
    m: usize,
    factorial: BigInt,
    /// powers[p][j] = k_p^j, grown on demand
    powers: Vec<Vec<BigInt>>,
}

impl MaclaurinGen {
    fn new(tp: &TrigPoly) -> Self {
        let mut denom = BigInt::one();
        for (_, h) in tp.harmonics() {
            for c in h.cos.coeffs().iter().chain(h.sin.coeffs()) {
                denom = denom.lcm(c.denom());
            }
        }
        let scale = |c: &BigRational| c.numer() * (&denom / c.denom());
        let parts: Vec<_> = tp
            .harmonics()
            .map(|(k, h)| {
                (
                    k,
                    h.cos.coeffs().iter().map(scale).collect(),
                    h.sin.coeffs().iter().map(scale).collect(),
                )
            })
            .collect();
        let powers = parts.iter().map(|_| Vec::new()).collect();
        MaclaurinGen {
            degree: tp.max_degree(),
            parts,
            denom,
            m: 0,
            factorial: BigInt::one(),
            powers,
        }
    }

    fn next_coeff(&mut self) -> BigRational {
        let m = self.m;
        if m > 0 {
            self.factorial *= BigInt::from(m);
        }
        // m!/(m-i)! for i = 0..=min(m, degree)
        let top = m.min(self.degree);
        let mut falling = Vec::with_capacity(top + 1);
        falling.push(BigInt::one());
        for i in 1..=top {
            let prev = &falling[i - 1];
            falling.push(prev * BigInt::from(m - i + 1));
        }
        for (p, (k, _, _)) in self.parts.iter().enumerate() {
            let pw = &mut self.powers[p];
            while pw.len() <= m {
                let next = match pw.last() {
                    None => BigInt::one(),
                    Some(last) => last * BigInt::from(*k),
                };
                pw.push(next);
            }
        }
        let mut sum = BigInt::zero();
        for (p, (_, cos, sin)) in self.parts.iter().enumerate() {
            for i in 0..=top {
                let j = m - i;
                let (coeffs, sign_neg) = if j % 2 == 0 {
                    (cos, (j / 2) % 2 == 1)
                } else {
                    (sin, ((j - 1) / 2) % 2 == 1)
                };
                let Some(a) = coeffs.get(i) else { continue };
                if a.is_zero() {
                    continue;
                }
                let kp = &self.powers[p][j];
                if kp.is_zero() {
                    continue;
                }
                let term = a * kp * &falling[i];
                if sign_neg {
                    sum -= term;
                } else {
                    sum += term;
                }
            }
        }
        self.m += 1;
        BigRational::new(sum, &self.denom * &self.factorial)
    }
}

pub(crate) fn maclaurin_exact(tp: &TrigPoly, terms: usize) -> Vec<BigRational> {
    let mut gen = MaclaurinGen::new(tp);
    (0..terms).map(|_| gen.next_coeff()).collect()
}

/// Number of coefficients kept past the leading one; enough that the tail
/// is negligible for `k_max |x| <= SERIES_MAX_KX`.
fn tail_terms(degree: usize) -> usize {
    150 + degree
}

fn build_series(tp: &TrigPoly) -> Option<Series> {
    if tp.is_zero() {
        return None;
    }
    let mut gen = MaclaurinGen::new(tp);
    let mut start = None;
    // Leading-order search cap; every element used here vanishes to order
    // well below this.
    for m in 0..4000 {
        let c = gen.next_coeff();
        if !c.is_zero() {
            start = Some((m, c));
            break;
        }
    }
    let (start, first) = start?;
    let mut coeffs = Vec::with_capacity(tail_terms(tp.max_degree()) + 1);
    coeffs.push(Dd::from_rational(&first));
    for _ in 0..tail_terms(tp.max_degree()) {
        let c = gen.next_coeff();
        coeffs.push(Dd::from_rational(&c));
    }
    // Trailing coefficients that underflowed carry no information.
    while coeffs.len() > 1 && coeffs.last().is_some_and(|c| c.hi == 0.0) {
        coeffs.pop();
    }
    Some(Series { start, coeffs })
}

/// One-off evaluation that only builds the series when the closed form is
/// too ill-conditioned.
pub(crate) fn eval_once(tp: &TrigPoly, x: f64) -> Result<f64> {
    let closed = TrigEval::closed_form_only(tp);
    if closed.is_zero() {
        return Ok(0.0);
    }
    if !x.is_finite() {
        return Err(Error::usage("evaluation point must be finite"));
    }
    let c = check_finite(closed.closed_form(x), x)?;
    if c.rel_error() <= CLOSED_FORM_ACCEPT || closed.kx(x) > SERIES_MAX_KX {
        return Ok(c.value.to_f64());
    }
    match build_series(tp) {
        Some(s) => {
            let e = check_finite(series_eval(&s, x, 0), x)?;
            Ok(if e.error < c.error { e.value } else { c.value }.to_f64())
        }
        None => Ok(c.value.to_f64()),
    }
}

/// Exact rational value of `|c|` as f64, for tests and diagnostics.
pub fn abs_f64(c: &BigRational) -> f64 {
    crate::dd::rational_to_f64(&c.abs())
}
