//! Residual checks for the identities satisfied by solutions of
//! `f'' + p f' + q f = 0`, parameterized by a coefficient model.
//!
//! Every pointwise check is computed as a pair of sides carrying a running
//! magnitude (the sum of absolute values of all products that went into
//! it), so the relative residual is measured against the size of the terms
//! rather than against a possibly cancelling result.

use alloc::boxed::Box;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::ops::{Add, Div, Mul, Neg, Sub};
use core::str::FromStr;

use num_traits::{ToPrimitive, Zero};

use crate::bessel::{bessel_stack, bessel_stack_over_power, BesselOrder};
use crate::determinants::{richardson_derivative, symbolic_v, DerivStack};
use crate::error::{Error, Result};
use crate::eval::{TrigEval, MACLAURIN_RADIUS};
use crate::grid::GridSpec;
use crate::quad;
use crate::roots;
use crate::trigpoly::{spherical_fn, TrigPoly};

/// Default tolerance for identities whose stack is exact.
pub const EXACT_TOL: f64 = 1e-9;
/// Default tolerance when a derivative has to be approximated numerically.
pub const NUMERIC_TOL: f64 = 1e-7;
/// Default tolerance for the integral representations.
pub const INTEGRAL_TOL: f64 = 1e-8;
/// Default tolerance on the sign conditions of the positivity theorem.
pub const CRITERION_TOL: f64 = 1e-12;

const SERIES_TOL: f64 = 1e-16;
const RICHARDSON_HALVINGS: usize = 4;

// ---------------------------------------------------------------------------
// coefficient models

pub type Coeff = Box<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ModelFamily {
    Spherical { n: usize },
    Bessel { nu: f64 },
    Custom,
}

/// Analytic coefficient functions of a custom model.
pub struct CoeffFns {
    /// `p, p', p'', p''', p''''`.
    pub p: [Coeff; 5],
    /// `q, q', q''`.
    pub q: [Coeff; 3],
    /// `q'''`, only needed by the `w'` identity when `q' != 0`.
    pub q3: Option<Coeff>,
    /// An antiderivative of `p`.
    pub big_p: Coeff,
}

/// The ODE data `p`, `q` with derivatives, on an open interval.
pub struct CoeffModel {
    name: String,
    family: ModelFamily,
    fns: CoeffFns,
    domain: (f64, f64),
    qprime_is_zero: bool,
}

impl fmt::Debug for CoeffModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CoeffModel")
            .field("name", &self.name)
            .field("domain", &self.domain)
            .field("qprime_is_zero", &self.qprime_is_zero)
            .finish()
    }
}

/// All coefficient values at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelValues {
    pub x: f64,
    pub p: [f64; 5],
    pub q: [f64; 3],
    pub q3: Option<f64>,
    pub big_p: f64,
}

fn coeff(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Coeff {
    Box::new(f)
}

impl CoeffModel {
    /// `p = -2n/x`, `q = 1`: the equation of `f_n`.
    pub fn spherical(n: usize) -> Self {
        let k = 2.0 * n as f64;
        CoeffModel {
            name: format!("spherical:{n}"),
            family: ModelFamily::Spherical { n },
            fns: CoeffFns {
                p: [
                    coeff(move |x| -k / x),
                    coeff(move |x| k / (x * x)),
                    coeff(move |x| -2.0 * k / (x * x * x)),
                    coeff(move |x| 6.0 * k / (x * x * x * x)),
                    coeff(move |x| -24.0 * k / (x * x * x * x * x)),
                ],
                q: [coeff(|_| 1.0), coeff(|_| 0.0), coeff(|_| 0.0)],
                q3: Some(coeff(|_| 0.0)),
                big_p: coeff(move |x| -k * libm::log(x)),
            },
            domain: (0.0, f64::INFINITY),
            qprime_is_zero: true,
        }
    }

    /// `p = 1/x`, `q = 1 - nu^2/x^2`: Bessel's equation.
    pub fn bessel(nu: BesselOrder) -> Self {
        let nu = nu.value();
        let s = nu * nu;
        CoeffModel {
            name: format!("bessel:{nu}"),
            family: ModelFamily::Bessel { nu },
            fns: CoeffFns {
                p: [
                    coeff(|x| 1.0 / x),
                    coeff(|x| -1.0 / (x * x)),
                    coeff(|x| 2.0 / (x * x * x)),
                    coeff(|x| -6.0 / (x * x * x * x)),
                    coeff(|x| 24.0 / (x * x * x * x * x)),
                ],
                q: [
                    coeff(move |x| 1.0 - s / (x * x)),
                    coeff(move |x| 2.0 * s / (x * x * x)),
                    coeff(move |x| -6.0 * s / (x * x * x * x)),
                ],
                q3: Some(coeff(move |x| 24.0 * s / (x * x * x * x * x))),
                big_p: coeff(libm::log),
            },
            domain: (0.0, f64::INFINITY),
            qprime_is_zero: nu == 0.0,
        }
    }

    /// A user model. The derivative fields are spot-checked against
    /// Richardson-extrapolated differences at a few interior points.
    pub fn custom(
        name: impl Into<String>,
        fns: CoeffFns,
        domain: (f64, f64),
        qprime_is_zero: bool,
    ) -> Result<Self> {
        if !(domain.0 < domain.1) {
            return Err(Error::usage("model domain must be a non-empty open interval"));
        }
        let model = CoeffModel {
            name: name.into(),
            family: ModelFamily::Custom,
            fns,
            domain,
            qprime_is_zero,
        };
        let points = model.sample_points();
        model.check_consistency(&points)?;
        Ok(model)
    }

    fn sample_points(&self) -> Vec<f64> {
        let (a, b) = self.domain;
        [0.137, 0.371, 0.613, 0.889]
            .iter()
            .map(|&t| match (a.is_finite(), b.is_finite()) {
                (true, true) => a + (b - a) * t,
                (true, false) => a + 1.0 + 8.0 * t,
                (false, true) => b - 1.0 - 8.0 * t,
                (false, false) => -4.0 + 8.0 * t,
            })
            .collect()
    }

    /// Checks every derivative field, and `P' = p`, at `points`.
    pub fn check_consistency(&self, points: &[f64]) -> Result<()> {
        let f = &self.fns;
        let mut chains: Vec<(&Coeff, &Coeff, String)> = Vec::new();
        for k in 0..4 {
            chains.push((&f.p[k], &f.p[k + 1], format!("p^({})", k + 1)));
        }
        chains.push((&f.q[0], &f.q[1], "q'".to_string()));
        chains.push((&f.q[1], &f.q[2], "q''".to_string()));
        if let Some(q3) = &f.q3 {
            chains.push((&f.q[2], q3, "q'''".to_string()));
        }
        chains.push((&f.big_p, &f.p[0], "P'".to_string()));
        for &x in points {
            self.check_domain(x)?;
            let h0 = 1e-2 * x.abs().max(1e-2).min(0.25 * self.margin(x));
            for (g, dg, label) in &chains {
                let fd = richardson_derivative(&|t| Ok(g(t)), x, h0, RICHARDSON_HALVINGS)?;
                let an = dg(x);
                if (fd - an).abs() > 1e-6 * (an.abs() + fd.abs()) + 1e-12 * (1.0 + g(x).abs()) {
                    return Err(Error::usage(format!(
                        "model {}: {label} is inconsistent at x = {x} (analytic {an}, difference quotient {fd})",
                        self.name
                    )));
                }
            }
            if self.qprime_is_zero && f.q[1](x) != 0.0 {
                return Err(Error::usage(format!(
                    "model {} claims q' = 0 but q'({x}) = {}",
                    self.name,
                    f.q[1](x)
                )));
            }
        }
        Ok(())
    }

    fn margin(&self, x: f64) -> f64 {
        let (a, b) = self.domain;
        (x - a).min(b - x).min(1.0)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn family(&self) -> ModelFamily {
        self.family
    }

    pub fn domain(&self) -> (f64, f64) {
        self.domain
    }

    pub fn qprime_is_zero(&self) -> bool {
        self.qprime_is_zero
    }

    pub fn check_domain(&self, x: f64) -> Result<()> {
        if x > self.domain.0 && x < self.domain.1 {
            Ok(())
        } else {
            Err(Error::usage(format!(
                "x = {x} is outside the domain ({}, {}) of model {}",
                self.domain.0, self.domain.1, self.name
            )))
        }
    }

    pub fn values(&self, x: f64) -> Result<ModelValues> {
        self.check_domain(x)?;
        let f = &self.fns;
        let mv = ModelValues {
            x,
            p: [f.p[0](x), f.p[1](x), f.p[2](x), f.p[3](x), f.p[4](x)],
            q: [f.q[0](x), f.q[1](x), f.q[2](x)],
            q3: f.q3.as_ref().map(|g| g(x)),
            big_p: (f.big_p)(x),
        };
        let finite = mv.p.iter().chain(mv.q.iter()).all(|v| v.is_finite()) && mv.big_p.is_finite();
        if !finite {
            return Err(Error::singular(x, format!("model {} is not finite", self.name)));
        }
        Ok(mv)
    }
}

// ---------------------------------------------------------------------------
// tags

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum IdentityId {
    #[cfg_attr(feature = "serde", serde(rename = "prop1"))]
    Prop1,
    #[cfg_attr(feature = "serde", serde(rename = "integral-v"))]
    IntegralV,
    #[cfg_attr(feature = "serde", serde(rename = "integral-vfn"))]
    IntegralVfn,
    #[cfg_attr(feature = "serde", serde(rename = "integral-vJnu"))]
    IntegralVJnu,
    #[cfg_attr(feature = "serde", serde(rename = "thm-main1-criterion"))]
    ThmMain1Criterion,
    #[cfg_attr(feature = "serde", serde(rename = "prop2"))]
    Prop2,
    #[cfg_attr(feature = "serde", serde(rename = "cor2-ode"))]
    Cor2Ode,
    #[cfg_attr(feature = "serde", serde(rename = "vfprime"))]
    VfPrime,
    #[cfg_attr(feature = "serde", serde(rename = "thm-main2"))]
    ThmMain2,
    #[cfg_attr(feature = "serde", serde(rename = "remark-zero"))]
    RemarkZero,
    #[cfg_attr(feature = "serde", serde(rename = "cubic-coeffs"))]
    CubicCoeffs,
    #[cfg_attr(feature = "serde", serde(rename = "cor5"))]
    Cor5,
    #[cfg_attr(feature = "serde", serde(rename = "thm-main3"))]
    ThmMain3,
    #[cfg_attr(feature = "serde", serde(rename = "thm-main4"))]
    ThmMain4,
    #[cfg_attr(feature = "serde", serde(rename = "thm-main6"))]
    ThmMain6,
    #[cfg_attr(feature = "serde", serde(rename = "a23-coeffs"))]
    A23Coeffs,
    #[cfg_attr(feature = "serde", serde(rename = "eq-newAA"))]
    EqNewAA,
    #[cfg_attr(feature = "serde", serde(rename = "integral-V"))]
    IntegralBigV,
    #[cfg_attr(feature = "serde", serde(rename = "eq-Vpositive"))]
    EqVPositive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IdentityKind {
    Pointwise,
    AtZeros,
    Integral,
    Criterion,
}

impl IdentityId {
    pub const ALL: [IdentityId; 19] = [
        IdentityId::Prop1,
        IdentityId::IntegralV,
        IdentityId::IntegralVfn,
        IdentityId::IntegralVJnu,
        IdentityId::ThmMain1Criterion,
        IdentityId::Prop2,
        IdentityId::Cor2Ode,
        IdentityId::VfPrime,
        IdentityId::ThmMain2,
        IdentityId::RemarkZero,
        IdentityId::CubicCoeffs,
        IdentityId::Cor5,
        IdentityId::ThmMain3,
        IdentityId::ThmMain4,
        IdentityId::ThmMain6,
        IdentityId::A23Coeffs,
        IdentityId::EqNewAA,
        IdentityId::IntegralBigV,
        IdentityId::EqVPositive,
    ];

    pub fn tag(self) -> &'static str {
        use IdentityId::*;
        match self {
            Prop1 => "prop1",
            IntegralV => "integral-v",
            IntegralVfn => "integral-vfn",
            IntegralVJnu => "integral-vJnu",
            ThmMain1Criterion => "thm-main1-criterion",
            Prop2 => "prop2",
            Cor2Ode => "cor2-ode",
            VfPrime => "vfprime",
            ThmMain2 => "thm-main2",
            RemarkZero => "remark-zero",
            CubicCoeffs => "cubic-coeffs",
            Cor5 => "cor5",
            ThmMain3 => "thm-main3",
            ThmMain4 => "thm-main4",
            ThmMain6 => "thm-main6",
            A23Coeffs => "a23-coeffs",
            EqNewAA => "eq-newAA",
            IntegralBigV => "integral-V",
            EqVPositive => "eq-Vpositive",
        }
    }

    pub fn kind(self) -> IdentityKind {
        use IdentityId::*;
        match self {
            IntegralV | IntegralVfn | IntegralVJnu | IntegralBigV | EqVPositive => IdentityKind::Integral,
            ThmMain1Criterion => IdentityKind::Criterion,
            RemarkZero => IdentityKind::AtZeros,
            _ => IdentityKind::Pointwise,
        }
    }

    /// Highest derivative of `f` the check reads.
    pub fn depth(self) -> usize {
        use IdentityId::*;
        match self {
            A23Coeffs => 2,
            ThmMain1Criterion | IntegralV | IntegralVfn | IntegralVJnu => 2,
            Prop1 | VfPrime | ThmMain6 | EqNewAA | IntegralBigV | EqVPositive => 3,
            Prop2 | Cor2Ode | ThmMain2 | RemarkZero | CubicCoeffs | Cor5 => 4,
            ThmMain3 | ThmMain4 => 5,
        }
    }

    fn needs_qprime_zero(self) -> bool {
        use IdentityId::*;
        matches!(self, ThmMain4 | ThmMain6 | A23Coeffs | EqNewAA | IntegralBigV | EqVPositive)
    }

    fn divides_by_pprime(self) -> bool {
        use IdentityId::*;
        matches!(self, Prop2 | ThmMain4 | A23Coeffs | EqNewAA | IntegralBigV | EqVPositive | ThmMain1Criterion)
    }

    fn spherical_only(self) -> bool {
        use IdentityId::*;
        matches!(self, Cor2Ode | Cor5 | IntegralVfn | EqVPositive)
    }

    pub fn default_tolerance(self) -> f64 {
        match self.kind() {
            IdentityKind::Integral => INTEGRAL_TOL,
            IdentityKind::Criterion => CRITERION_TOL,
            _ => EXACT_TOL,
        }
    }
}

impl fmt::Display for IdentityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for IdentityId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        IdentityId::ALL
            .iter()
            .copied()
            .find(|id| id.tag() == s)
            .ok_or_else(|| Error::usage(format!("unknown identity tag '{s}'")))
    }
}

// ---------------------------------------------------------------------------
// solutions

/// A solution of the model's equation, as a source of derivative stacks.
pub enum Solution {
    /// `f_n`, exact in the ring.
    Spherical {
        n: usize,
        f: TrigPoly,
        derivs: Vec<TrigEval>,
    },
    /// Any ring element, with exact derivatives.
    Trig { f: TrigPoly, derivs: Vec<TrigEval> },
    /// `J_nu` by its series.
    Bessel { nu: BesselOrder },
    /// A black box returning `f, f', ..., f^(depth)`; deeper derivatives
    /// are extrapolated differences of the last one.
    Sampled {
        depth: usize,
        eval: Box<dyn Fn(f64) -> Result<Vec<f64>> + Send + Sync>,
    },
}

const TRIG_DEPTH: usize = 5;

impl Solution {
    pub fn spherical(n: usize) -> Result<Self> {
        let f = spherical_fn(n)?;
        let derivs = f.derivatives(TRIG_DEPTH).iter().map(TrigPoly::compile).collect();
        Ok(Solution::Spherical { n, f, derivs })
    }

    pub fn trig(f: TrigPoly) -> Self {
        let derivs = f.derivatives(TRIG_DEPTH).iter().map(TrigPoly::compile).collect();
        Solution::Trig { f, derivs }
    }

    pub fn bessel(nu: BesselOrder) -> Self {
        Solution::Bessel { nu }
    }

    pub fn sampled(depth: usize, eval: impl Fn(f64) -> Result<Vec<f64>> + Send + Sync + 'static) -> Self {
        Solution::Sampled {
            depth,
            eval: Box::new(eval),
        }
    }

    /// Whether a stack of depth `m` is exact rather than extrapolated.
    pub fn exact_to(&self, m: usize) -> bool {
        match self {
            Solution::Sampled { depth, .. } => m <= *depth,
            _ => true,
        }
    }

    pub fn value(&self, x: f64) -> Result<f64> {
        match self {
            Solution::Spherical { derivs, .. } | Solution::Trig { derivs, .. } => derivs[0].eval(x),
            Solution::Bessel { nu } => Ok(bessel_stack(*nu, x, 0, SERIES_TOL)?[0]),
            Solution::Sampled { eval, .. } => Ok(eval(x)?[0]),
        }
    }

    /// `f(x), ..., f^(m)(x)` (at least depth 2).
    pub fn stack(&self, x: f64, m: usize) -> Result<DerivStack> {
        let m = m.max(2);
        match self {
            Solution::Spherical { f, derivs, .. } | Solution::Trig { f, derivs } => {
                if m <= TRIG_DEPTH {
                    DerivStack::from_evals(&derivs[..=m], x)
                } else {
                    DerivStack::from_trigpoly(f, x, m)
                }
            }
            Solution::Bessel { nu } => DerivStack::new(x, bessel_stack(*nu, x, m, SERIES_TOL)?),
            Solution::Sampled { depth, eval } => {
                let mut vals = eval(x)?;
                if vals.len() <= *depth {
                    return Err(Error::usage(format!(
                        "sampled solution returned {} values, expected {}",
                        vals.len(),
                        depth + 1
                    )));
                }
                vals.truncate(depth + 1);
                let top = *depth;
                for extra in 1..=m.saturating_sub(top) {
                    vals.push(nested_derivative(eval.as_ref(), top, extra, x)?);
                }
                vals.truncate(m + 1);
                DerivStack::new(x, vals)
            }
        }
    }
}

fn nested_derivative(
    eval: &(dyn Fn(f64) -> Result<Vec<f64>> + Send + Sync),
    top: usize,
    levels: usize,
    x: f64,
) -> Result<f64> {
    let h0 = 1e-2 * x.abs().max(1e-2);
    if levels == 1 {
        return richardson_derivative(&|t| Ok(eval(t)?[top]), x, h0, RICHARDSON_HALVINGS);
    }
    richardson_derivative(
        &|t| nested_derivative(eval, top, levels - 1, t),
        x,
        h0,
        RICHARDSON_HALVINGS,
    )
}

// ---------------------------------------------------------------------------
// value-with-magnitude arithmetic

#[derive(Debug, Clone, Copy)]
struct M {
    v: f64,
    m: f64,
}

fn c(v: f64) -> M {
    M { v, m: v.abs() }
}

impl Add for M {
    type Output = M;
    fn add(self, o: M) -> M {
        M { v: self.v + o.v, m: self.m + o.m }
    }
}

impl Sub for M {
    type Output = M;
    fn sub(self, o: M) -> M {
        M { v: self.v - o.v, m: self.m + o.m }
    }
}

impl Mul for M {
    type Output = M;
    fn mul(self, o: M) -> M {
        M { v: self.v * o.v, m: self.m * o.m }
    }
}

impl Mul<M> for f64 {
    type Output = M;
    fn mul(self, o: M) -> M {
        M { v: self * o.v, m: self.abs() * o.m }
    }
}

impl Div for M {
    type Output = M;
    fn div(self, o: M) -> M {
        M { v: self.v / o.v, m: self.m / o.v.abs() }
    }
}

impl Neg for M {
    type Output = M;
    fn neg(self) -> M {
        M { v: -self.v, m: self.m }
    }
}

/// One evaluated identity: both sides and the magnitude of their terms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Residual {
    pub lhs: f64,
    pub rhs: f64,
    pub abs: f64,
    pub scale: f64,
}

impl Residual {
    fn from_sides(l: M, r: M) -> Self {
        Residual {
            lhs: l.v,
            rhs: r.v,
            abs: (l.v - r.v).abs(),
            scale: l.m + r.m,
        }
    }

    /// `|lhs - rhs|` relative to the term scale, absolute below scale 1.
    pub fn rel(&self) -> f64 {
        self.abs / self.scale.max(1.0)
    }

    fn worse(self, o: Residual) -> Residual {
        if o.rel() > self.rel() {
            o
        } else {
            self
        }
    }
}

struct Mv {
    p: M,
    p1: M,
    p2: M,
    p3: M,
    p4: M,
    q: M,
    q1: M,
    q2: M,
    q3: Option<M>,
    x: f64,
}

impl Mv {
    fn new(v: &ModelValues) -> Self {
        Mv {
            p: c(v.p[0]),
            p1: c(v.p[1]),
            p2: c(v.p[2]),
            p3: c(v.p[3]),
            p4: c(v.p[4]),
            q: c(v.q[0]),
            q1: c(v.q[1]),
            q2: c(v.q[2]),
            q3: v.q3.map(c),
            x: v.x,
        }
    }

    fn nonzero_p1(&self, what: &str) -> Result<()> {
        if self.p1.v == 0.0 {
            Err(Error::singular(self.x, format!("{what} divides by p'(x) = 0")))
        } else {
            Ok(())
        }
    }
}

struct Fs([M; 6]);

impl Fs {
    fn new(s: &DerivStack, need: usize) -> Result<Self> {
        s.require(need)?;
        let mut a = [c(0.0); 6];
        for (i, slot) in a.iter_mut().enumerate().take(s.depth().min(5) + 1) {
            *slot = c(s.d(i));
        }
        Ok(Fs(a))
    }

    fn v(&self) -> M {
        let f = &self.0;
        f[1] * f[1] - f[2] * f[0]
    }

    fn v1(&self) -> M {
        let f = &self.0;
        f[1] * f[2] - f[3] * f[0]
    }

    fn v2(&self) -> M {
        let f = &self.0;
        f[2] * f[2] - f[4] * f[0]
    }

    fn w(&self) -> M {
        let [f0, f1, f2, f3, f4, _] = self.0;
        f2 * (f2 * f2 - f1 * f3) - f1 * (f3 * f2 - f1 * f4) + f0 * (f3 * f3 - f2 * f4)
    }

    /// Only the last row of the determinant depends on `f^(5)`.
    fn w1(&self) -> M {
        let [f0, f1, f2, f3, f4, f5] = self.0;
        f2 * (f2 * f3 - f1 * f4) - f1 * (f3 * f3 - f1 * f5) + f0 * (f3 * f4 - f2 * f5)
    }
}

// ---------------------------------------------------------------------------
// coefficient formulas

fn cubic(m: &Mv) -> [M; 4] {
    let Mv { p, p1, p2, q, q1, q2, .. } = *m;
    let a0 = 2.0 * p1 * q * q - p * q * q1 + q1 * q1 - q2 * q;
    let a1 = 3.0 * p1 * p * q - p2 * q - 2.0 * q * q1 - p * p * q1 + 2.0 * p1 * q1 - p * q2;
    let a2 = p1 * p1 + p * p * p1 - p * p2 + 2.0 * p1 * q - 3.0 * p * q1 - q2;
    let a3 = p * p1 - p2 - 2.0 * q1;
    [a0, a1, a2, a3]
}

impl Clone for Mv {
    fn clone(&self) -> Self {
        *self
    }
}
impl Copy for Mv {}

/// `B` of the `V` combination (needs `q' = 0`).
fn big_b(m: &Mv) -> M {
    let Mv { p, p1, p2, p3, q, .. } = *m;
    0.5 * p * p - p1 - 2.0 * q + p3 / p1 - 1.5 * (p2 * p2) / (p1 * p1)
}

fn big_b_prime(m: &Mv) -> M {
    let Mv { p, p1, p2, p3, p4, .. } = *m;
    p * p1 - p2 + p4 / p1 - 4.0 * (p3 * p2) / (p1 * p1) + 3.0 * (p2 * p2 * p2) / (p1 * p1 * p1)
}

fn a23(m: &Mv) -> (M, M) {
    let Mv { p, p1, p2, p3, p4, .. } = *m;
    let a2 = 1.5 * (p1 * p1 - p3 + p2 * p2 / p1);
    let a3 = 1.5 * (p2 - p1 * p)
        - p4 / p1
        + 4.0 * (p2 * p3) / (p1 * p1)
        - 3.0 * (p2 * p2 * p2) / (p1 * p1 * p1);
    (a2, a3)
}

fn a2_prime(m: &Mv) -> M {
    let Mv { p1, p2, p3, p4, .. } = *m;
    1.5 * (2.0 * p1 * p2 - p4 + 2.0 * (p2 * p3) / p1 - (p2 * p2 * p2) / (p1 * p1))
}

fn big_v(m: &Mv, f: &Fs) -> M {
    let [f0, f1, ..] = f.0;
    let Mv { p, p1, p2, .. } = *m;
    p1 * f1 * f1 + 0.5 * (p1 * p - p2) * f1 * f0 - big_b(m) * f.v()
}

/// The four coefficients of `w` as a cubic form in `(f, f')`.
pub fn cubic_coeffs(model: &CoeffModel, x: f64) -> Result<[f64; 4]> {
    let m = Mv::new(&model.values(x)?);
    Ok(cubic(&m).map(|a| a.v))
}

/// `(A2, A3)` of the `V` combination.
pub fn a23_coeffs(model: &CoeffModel, x: f64) -> Result<(f64, f64)> {
    if !model.qprime_is_zero() {
        return Err(Error::usage(format!("model {} has q' != 0", model.name())));
    }
    let m = Mv::new(&model.values(x)?);
    m.nonzero_p1("A2/A3")?;
    let (a2, a3) = a23(&m);
    Ok((a2.v, a3.v))
}

/// `A1 = a1' - a1 p + 2 a2` for `a1 = p'`, `a2 = (p'p - p'')/2`.
pub fn v_specialization_a1(model: &CoeffModel, x: f64) -> Result<Residual> {
    let m = Mv::new(&model.values(x)?);
    let a1 = m.p2 - m.p1 * m.p + (m.p1 * m.p - m.p2);
    Ok(Residual::from_sides(a1, c(0.0)))
}

/// The criterion `q - (p/p') q'`.
pub fn criterion_value(model: &CoeffModel, x: f64) -> Result<f64> {
    let m = Mv::new(&model.values(x)?);
    m.nonzero_p1("the positivity criterion")?;
    Ok((m.q - m.p / m.p1 * m.q1).v)
}

// ---------------------------------------------------------------------------
// applicability

/// `Some(reason)` when `id` says nothing about this model/solution pair.
pub fn not_applicable(id: IdentityId, model: &CoeffModel, sol: &Solution) -> Option<String> {
    let fam = model.family();
    if id.spherical_only() && !matches!(fam, ModelFamily::Spherical { .. }) {
        return Some("stated for the spherical model only".into());
    }
    if id == IdentityId::IntegralVJnu && !matches!(fam, ModelFamily::Bessel { .. }) {
        return Some("stated for the Bessel model only".into());
    }
    if id.needs_qprime_zero() && !model.qprime_is_zero() {
        return Some("requires q' = 0".into());
    }
    if id.divides_by_pprime() && fam == (ModelFamily::Spherical { n: 0 }) {
        return Some("p' vanishes identically for n = 0".into());
    }
    if id == IdentityId::ThmMain3 && model.fns.q3.is_none() && !model.qprime_is_zero() {
        return Some("model provides no q'''".into());
    }
    if id.kind() == IdentityKind::Integral {
        let matched = match (fam, sol) {
            (ModelFamily::Spherical { n }, Solution::Spherical { n: m, .. }) => n == *m,
            (ModelFamily::Bessel { nu }, Solution::Bessel { nu: o }) => nu == o.value(),
            _ => false,
        };
        if !matched {
            return Some("integral representations are built in for f_n and J_nu only".into());
        }
        match (id, fam) {
            (IdentityId::IntegralV | IdentityId::IntegralVJnu, ModelFamily::Bessel { nu }) if nu <= 1.0 => {
                return Some("needs nu > 1".into())
            }
            (IdentityId::IntegralVfn | IdentityId::IntegralV, ModelFamily::Spherical { n: 0 }) => {
                return Some("f_0'(0) != 0".into())
            }
            (IdentityId::IntegralBigV, ModelFamily::Bessel { .. }) => {
                return Some("J_0(0) != 0".into())
            }
            _ => {}
        }
    }
    None
}

// ---------------------------------------------------------------------------
// pointwise residuals

/// Both sides of a pointwise identity at `stack.x`.
pub fn residual_detail(id: IdentityId, model: &CoeffModel, stack: &DerivStack) -> Result<Residual> {
    use IdentityId::*;
    if id.needs_qprime_zero() && !model.qprime_is_zero() {
        return Err(Error::usage(format!("{id} requires q' = 0; model {} has q' != 0", model.name())));
    }
    let x = stack.x();
    let m = Mv::new(&model.values(x)?);
    if id.divides_by_pprime() {
        m.nonzero_p1(id.tag())?;
    }
    let f = Fs::new(stack, id.depth())?;
    let [f0, f1, f2, f3, _, _] = f.0;
    let Mv { p, p1, p2, p3, q, q1, q2, .. } = m;
    let spherical_n = || match model.family() {
        ModelFamily::Spherical { n } => Ok(n as f64),
        _ => Err(Error::usage(format!("{id} is stated for the spherical model only"))),
    };
    let r = match id {
        Prop1 => Residual::from_sides(f.v1() + p * f.v(), p1 * f1 * f0 + q1 * f0 * f0),
        Prop2 => {
            let lhs = f.v2() + (p - p2 / p1) * f.v1() + (2.0 * p1 - p2 * p / p1) * f.v();
            let rhs = 2.0 * p1 * f1 * f1 + f0 * f0 * (q2 - q1 * p2 / p1) + 2.0 * q1 * f1 * f0;
            Residual::from_sides(lhs, rhs)
        }
        Cor2Ode => {
            let n = spherical_n()?;
            let lhs = f.v2() - (2.0 * (n - 1.0) / x) * f.v1();
            Residual::from_sides(lhs, (4.0 * n / (x * x)) * f1 * f1)
        }
        VfPrime => {
            let lhs = f2 * f2 - f1 * f3;
            Residual::from_sides(lhs, p1 * f1 * f1 + q1 * f1 * f0 + q * f.v())
        }
        ThmMain2 => {
            let base = (p1 * f1 + q1 * f0) * (p1 * f1 + q1 * f0) * f0;
            let a_first = 2.0 * p1 * f2 + (p2 + p1 * p + 2.0 * q1) * f1 + (q2 + p * q1) * f0;
            let a_second = (p2 - p1 * p + 2.0 * q1) * f1 + (-2.0 * p1 * q + q2 + p * q1) * f0;
            let w = f.w();
            Residual::from_sides(w, base - a_first * f.v())
                .worse(Residual::from_sides(w, base - a_second * f.v()))
        }
        RemarkZero => Residual::from_sides(f.w(), -(p2 - p1 * p + 2.0 * q1) * f1 * f1 * f1),
        CubicCoeffs => {
            let [a0, a1, a2, a3] = cubic(&m);
            let rhs = a0 * f0 * f0 * f0 + a1 * f1 * f0 * f0 + a2 * f1 * f1 * f0 + a3 * f1 * f1 * f1;
            Residual::from_sides(f.w(), rhs)
        }
        Cor5 => {
            let n = spherical_n()?;
            let inner = f0 * f0 * f0 - ((3.0 * n - 1.0) / x) * f1 * f0 * f0
                + ((2.0 * n * n - n + x * x) / (x * x)) * f1 * f1 * f0
                - ((n - 1.0) / x) * f1 * f1 * f1;
            Residual::from_sides(f.w(), (4.0 * n / (x * x)) * inner)
        }
        ThmMain3 => {
            let q3 = match m.q3 {
                Some(v) => v,
                None if model.qprime_is_zero() => c(0.0),
                None => return Err(Error::usage(format!("model {} provides no q'''", model.name()))),
            };
            let a_prime = (p3 - p2 * p - p1 * p1 + 2.0 * q2) * f1
                + (p2 - p1 * p + 2.0 * q1) * f2
                + (-2.0 * p2 * q - 2.0 * p1 * q1 + q3 + p1 * q1 + p * q2) * f0
                + (-2.0 * p1 * q + q2 + p * q1) * f1;
            let lhs = f.w1() + p * f.w();
            let rhs = (p1 * f1 + q1 * f0) * ((p2 + q1) * f1 * f0 + q2 * f0 * f0 + p1 * f1 * f1)
                - a_prime * f.v();
            Residual::from_sides(lhs, rhs)
        }
        ThmMain4 => {
            let lhs = f.w1() + 1.5 * (p - p2 / p1) * f.w();
            Residual::from_sides(lhs, p1 * f1 * big_v(&m, &f))
        }
        ThmMain6 => {
            // a generic triple a1 = 1 + x, a2 = x^2, a3 = -x
            let (a1, da1) = (c(1.0 + x), c(1.0));
            let (a2, da2) = (c(x * x), c(2.0 * x));
            let (a3, da3) = (c(-x), c(-1.0));
            let big_f = a1 * f1 * f1 + a2 * f1 * f0 + a3 * f.v();
            let big_f1 = da1 * f1 * f1
                + 2.0 * a1 * f1 * f2
                + da2 * f1 * f0
                + a2 * (f2 * f0 + f1 * f1)
                + da3 * f.v()
                + a3 * f.v1();
            let c1 = da1 - a1 * p + 2.0 * a2;
            let c2 = da2 - 2.0 * a1 * q + p * a2 + a3 * p1;
            let c3 = da3 - a2;
            Residual::from_sides(big_f1 + p * big_f, c1 * f1 * f1 + c2 * f1 * f0 + c3 * f.v())
        }
        A23Coeffs => {
            // the general coefficients specialized to a1 = p', a2 = (p'p - p'')/2, a3 = -B
            let a1 = p1;
            let a2 = 0.5 * (p1 * p - p2);
            let da2 = 0.5 * (p2 * p + p1 * p1 - p3);
            let a3 = -big_b(&m);
            let da3 = -big_b_prime(&m);
            let (want2, want3) = a23(&m);
            let got_a1 = p2 - a1 * p + 2.0 * a2;
            let got2 = da2 - 2.0 * a1 * q + p * a2 + a3 * p1;
            let got3 = da3 - a2;
            Residual::from_sides(got2, want2)
                .worse(Residual::from_sides(got3, want3))
                .worse(Residual::from_sides(got_a1, c(0.0)))
        }
        EqNewAA => {
            let b = big_b(&m);
            let v = f.v();
            let big_v1 = p2 * f1 * f1
                + 2.0 * p1 * f1 * f2
                + 0.5 * (p2 * p + p1 * p1 - p3) * f1 * f0
                + 0.5 * (p1 * p - p2) * (f2 * f0 + f1 * f1)
                - big_b_prime(&m) * v
                - b * f.v1();
            let (a2, a3) = a23(&m);
            Residual::from_sides(big_v1 + p * big_v(&m, &f), a2 * f1 * f0 + a3 * v)
        }
        IntegralV | IntegralVfn | IntegralVJnu | IntegralBigV | EqVPositive => {
            return Err(Error::usage(format!("{id} is an integral identity; use integral_check")))
        }
        ThmMain1Criterion => {
            return Err(Error::usage(format!("{id} is a sign condition; use positivity_criterion")))
        }
    };
    Ok(r)
}

/// `|LHS - RHS|` of a pointwise identity at `stack.x`.
pub fn residual(id: IdentityId, model: &CoeffModel, stack: &DerivStack) -> Result<f64> {
    residual_detail(id, model, stack).map(|r| r.abs)
}

/// `V(f)` at `stack.x` (needs `q' = 0`).
pub fn big_v_value(model: &CoeffModel, stack: &DerivStack) -> Result<f64> {
    if !model.qprime_is_zero() {
        return Err(Error::usage("V is defined for q' = 0 only"));
    }
    let m = Mv::new(&model.values(stack.x())?);
    m.nonzero_p1("V")?;
    Ok(big_v(&m, &Fs::new(stack, 2)?).v)
}

// ---------------------------------------------------------------------------
// reports

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum Status {
    Pass,
    Fail,
    NotApplicable,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct VerificationReport {
    pub identity: IdentityId,
    pub model: String,
    pub grid: GridSpec,
    pub status: Status,
    pub applicable: bool,
    pub pass: bool,
    pub points_evaluated: usize,
    pub max_abs_residual: f64,
    pub max_rel_residual: f64,
    pub tolerance: f64,
    pub worst_x: Option<f64>,
    pub note: Option<String>,
}

impl VerificationReport {
    fn empty(id: IdentityId, model: &CoeffModel, grid: GridSpec, tol: f64) -> Self {
        VerificationReport {
            identity: id,
            model: model.name().into(),
            grid,
            status: Status::Pass,
            applicable: true,
            pass: true,
            points_evaluated: 0,
            max_abs_residual: 0.0,
            max_rel_residual: 0.0,
            tolerance: tol,
            worst_x: None,
            note: None,
        }
    }

    fn not_applicable(id: IdentityId, model: &CoeffModel, grid: GridSpec, tol: f64, why: String) -> Self {
        VerificationReport {
            status: Status::NotApplicable,
            applicable: false,
            note: Some(why),
            ..VerificationReport::empty(id, model, grid, tol)
        }
    }

    fn record(&mut self, x: f64, r: &Residual) {
        self.points_evaluated += 1;
        let rel = if r.rel().is_nan() { f64::INFINITY } else { r.rel() };
        if self.worst_x.is_none() || rel > self.max_rel_residual {
            self.max_rel_residual = rel;
            self.worst_x = Some(x);
        }
        let abs = if r.abs.is_nan() { f64::INFINITY } else { r.abs };
        self.max_abs_residual = self.max_abs_residual.max(abs);
    }

    fn finish(mut self) -> Self {
        if self.applicable {
            self.pass = self.max_rel_residual <= self.tolerance;
            self.status = if self.pass { Status::Pass } else { Status::Fail };
        }
        self
    }
}

fn tolerance_for(id: IdentityId, sol: &Solution, tol: Option<f64>) -> f64 {
    tol.unwrap_or_else(|| {
        if id.kind() != IdentityKind::Integral && !sol.exact_to(id.depth()) {
            NUMERIC_TOL
        } else {
            id.default_tolerance()
        }
    })
}

/// Checks `id` for `sol` over `grid`.
pub fn verify_identity(
    id: IdentityId,
    model: &CoeffModel,
    sol: &Solution,
    grid: &GridSpec,
    tol: Option<f64>,
) -> Result<VerificationReport> {
    let tol = tolerance_for(id, sol, tol);
    if let Some(why) = not_applicable(id, model, sol) {
        return Ok(VerificationReport::not_applicable(id, model, *grid, tol, why));
    }
    let nodes = grid.nodes();
    let mut rep = VerificationReport::empty(id, model, *grid, tol);
    match id.kind() {
        IdentityKind::Pointwise => {
            for &x in &nodes {
                let r = residual_detail(id, model, &sol.stack(x, id.depth())?)?;
                rep.record(x, &r);
            }
        }
        IdentityKind::AtZeros => {
            let zeros = zeros_on(sol, &nodes)?;
            if zeros.is_empty() {
                rep.note = Some("f has no zero in the range".into());
            }
            for x in zeros {
                let r = residual_detail(id, model, &sol.stack(x, id.depth())?)?;
                rep.record(x, &r);
            }
        }
        IdentityKind::Integral => {
            if id == IdentityId::EqVPositive && model.family() == (ModelFamily::Spherical { n: 1 }) {
                rep.note = Some("prefactor 6n(n-1) vanishes for n = 1".into());
                return Ok(rep.finish());
            }
            for (x, r) in integral_residuals(id, model, sol, &nodes, quad_tol(tol))? {
                rep.record(x, &r);
            }
        }
        IdentityKind::Criterion => {
            for &x in &nodes {
                let crit = criterion_value(model, x)?;
                let m = Mv::new(&model.values(x)?);
                let crit_scale = m.q.m + (m.p / m.p1 * m.q1).m;
                if crit < 0.0 {
                    rep.note = Some(format!("hypothesis q - (p/p')q' < 0 at x = {x}"));
                    let r = Residual { lhs: crit, rhs: 0.0, abs: -crit, scale: crit_scale };
                    rep.record(x, &r);
                    continue;
                }
                let s = sol.stack(x, 2)?;
                let f = Fs::new(&s, 2)?;
                let v = f.v();
                let r = Residual { lhs: v.v, rhs: 0.0, abs: (-v.v).max(0.0), scale: v.m };
                rep.record(x, &r);
            }
        }
    }
    Ok(rep.finish())
}

/// Every registered identity over one grid, in tag order.
pub fn verify_all(
    model: &CoeffModel,
    sol: &Solution,
    grid: &GridSpec,
    tol: Option<f64>,
) -> Result<Vec<VerificationReport>> {
    IdentityId::ALL
        .iter()
        .map(|&id| verify_identity(id, model, sol, grid, tol))
        .collect()
}

/// Sign of `q - (p/p') q'` on a linear grid over `[lo, hi]`.
pub fn positivity_criterion(model: &CoeffModel, lo: f64, hi: f64, points: usize) -> Result<VerificationReport> {
    let grid = GridSpec::linear(lo, hi, points)?;
    let mut rep = VerificationReport::empty(IdentityId::ThmMain1Criterion, model, grid, 0.0);
    let mut worst = f64::INFINITY;
    for x in grid.nodes() {
        let crit = criterion_value(model, x)?;
        rep.points_evaluated += 1;
        if crit < worst {
            worst = crit;
            rep.worst_x = Some(x);
        }
    }
    rep.max_abs_residual = (-worst).max(0.0);
    rep.max_rel_residual = rep.max_abs_residual;
    rep.note = Some(format!("minimum of q - (p/p')q' is {worst}"));
    Ok(rep.finish())
}

fn zeros_on(sol: &Solution, nodes: &[f64]) -> Result<Vec<f64>> {
    let f = |x: f64| sol.value(x);
    let mut out = Vec::new();
    let mut prev = (nodes[0], f(nodes[0])?);
    if prev.1 == 0.0 {
        out.push(prev.0);
    }
    for &x in &nodes[1..] {
        let fx = f(x)?;
        if fx == 0.0 {
            out.push(x);
        } else if prev.1 != 0.0 && (prev.1 < 0.0) != (fx < 0.0) {
            out.push(roots::refine(&f, prev.0, x)?.0);
        }
        prev = (x, fx);
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// integral representations

fn quad_tol(tol: f64) -> f64 {
    (tol * 1e-3).clamp(1e-13, 1e-6)
}

type Integrand<'a> = Box<dyn Fn(f64) -> Result<f64> + 'a>;

/// `x^{2n+3} V(f_n)` as a ring element.
pub fn spherical_big_v_poly(n: usize) -> Result<TrigPoly> {
    let f = spherical_fn(n)?;
    let d = f.derivatives(1);
    let v = symbolic_v(&f);
    let x = TrigPoly::x();
    let k = 2 * n as i64;
    let kk = (2 * n * n.saturating_sub(1)) as i64;
    let x3 = &(&x * &x) * &x;
    let t = (&(&x * &d[1]) * &d[1]).scale_int(k) - (&f * &d[1]).scale_int(kk) - (&x * &v).scale_int(kk)
        + (&x3 * &v).scale_int(2);
    Ok(t)
}

/// `U = x T' - (2n+3) T` with `T` from [`spherical_big_v_poly`]; its sign is
/// the sign of `V' - (2n/x) V`.
pub fn spherical_v_growth_poly(n: usize) -> Result<TrigPoly> {
    let t = spherical_big_v_poly(n)?;
    Ok(&TrigPoly::x() * &t.diff() - t.scale_int(2 * n as i64 + 3))
}

/// `x w' - 3(n-1) w` for `f_n`; its sign is the sign of `w' - 3(n-1)w/x`.
pub fn spherical_w_growth_poly(n: usize) -> Result<TrigPoly> {
    let w = crate::determinants::symbolic_w(&spherical_fn(n)?);
    Ok(&TrigPoly::x() * &w.diff() - w.scale_int(3 * (n as i64 - 1)))
}

/// `lim_{x->0} e^{P} V(f_n) = lim x^{-2n} V(f_n)`.
fn spherical_v_boundary(n: usize) -> Result<f64> {
    let t = spherical_big_v_poly(n)?;
    let k = 2 * n + 3;
    let coeffs = t.maclaurin(k + 1);
    if coeffs[..k].iter().any(|c| !c.is_zero()) {
        return Err(Error::numerical(format!("e^P V(f_{n}) is unbounded at 0")));
    }
    Ok(coeffs[k].to_f64().unwrap_or(f64::NAN))
}

struct IntegralPlan<'a> {
    /// Integrands, each with its prefactor at `x` (applied after integrating).
    parts: Vec<(Integrand<'a>, Box<dyn Fn(f64) -> f64 + 'a>)>,
    /// Left side at `x` and the non-integral right-side terms.
    direct: Box<dyn Fn(f64, &DerivStack) -> Result<(M, M)> + 'a>,
    depth: usize,
}

fn plan<'a>(id: IdentityId, model: &'a CoeffModel, sol: &'a Solution) -> Result<IntegralPlan<'a>> {
    use IdentityId::*;
    // stable `g(t)/t^k` for t near 0, model-generic expression beyond
    let generic_or = |stable: Integrand<'a>, generic: Integrand<'a>| -> Integrand<'a> {
        Box::new(move |t: f64| if t < MACLAURIN_RADIUS { stable(t) } else { generic(t) })
    };
    let e_minus_p = move |x: f64| libm::exp(-(model.fns.big_p)(x));
    let fam = model.family();
    let v_direct = |_: f64, s: &DerivStack| -> Result<M> { Ok(Fs::new(s, 2)?.v()) };

    match (id, fam, sol) {
        (IntegralV, ModelFamily::Spherical { n }, Solution::Spherical { f, derivs, .. }) => {
            let f_sq = (f * f).compile();
            let k = (2 * n + 3) as usize;
            let nn = (n * (n + 1)) as f64;
            let d0 = &derivs[0];
            let stable: Integrand = Box::new(move |t| Ok(-2.0 * nn * f_sq.eval_over_power(t, k)?));
            let generic: Integrand = Box::new(move |t| {
                let m = Mv::new(&model.values(t)?);
                let ft = d0.eval(t)?;
                Ok(0.5 * ft * ft * (m.p2 + m.p1 * m.p - 2.0 * m.q1).v * libm::exp((model.fns.big_p)(t)))
            });
            Ok(IntegralPlan {
                parts: vec![(generic_or(stable, generic), Box::new(move |x| -e_minus_p(x)))],
                direct: Box::new(move |x, s| {
                    let m = Mv::new(&model.values(x)?);
                    let f0 = c(s.d(0));
                    Ok((v_direct(x, s)?, 0.5 * f0 * f0 * m.p1))
                }),
                depth: 2,
            })
        }
        (IntegralV, ModelFamily::Bessel { nu }, Solution::Bessel { nu: order }) => {
            let order = *order;
            let kk = 0.5 * (4.0 * nu * nu - 1.0);
            let stable: Integrand = Box::new(move |t| {
                let j = bessel_stack_over_power(order, t, 0, 1, SERIES_TOL)?[0];
                Ok(-kk * j * j)
            });
            let generic: Integrand = Box::new(move |t| {
                let m = Mv::new(&model.values(t)?);
                let ft = bessel_stack(order, t, 0, SERIES_TOL)?[0];
                Ok(0.5 * ft * ft * (m.p2 + m.p1 * m.p - 2.0 * m.q1).v * libm::exp((model.fns.big_p)(t)))
            });
            Ok(IntegralPlan {
                parts: vec![(generic_or(stable, generic), Box::new(move |x| -e_minus_p(x)))],
                direct: Box::new(move |x, s| {
                    let m = Mv::new(&model.values(x)?);
                    let f0 = c(s.d(0));
                    Ok((v_direct(x, s)?, 0.5 * f0 * f0 * m.p1))
                }),
                depth: 2,
            })
        }
        (IntegralVfn, ModelFamily::Spherical { n }, Solution::Spherical { f, .. }) => {
            let f_sq = (f * f).compile();
            let k = 2 * n + 3;
            let nf = n as f64;
            Ok(IntegralPlan {
                parts: vec![(
                    Box::new(move |t| f_sq.eval_over_power(t, k)),
                    Box::new(move |x| 2.0 * nf * (nf + 1.0) * libm::pow(x, 2.0 * nf)),
                )],
                direct: Box::new(move |x, s| {
                    let f0 = c(s.d(0));
                    Ok((v_direct(x, s)?, (nf / (x * x)) * f0 * f0))
                }),
                depth: 2,
            })
        }
        (IntegralVJnu, ModelFamily::Bessel { nu }, Solution::Bessel { nu: order }) => {
            let order = *order;
            Ok(IntegralPlan {
                parts: vec![(
                    Box::new(move |t| {
                        let j = bessel_stack_over_power(order, t, 0, 1, SERIES_TOL)?[0];
                        Ok(j * j)
                    }),
                    Box::new(move |x| (4.0 * nu * nu - 1.0) / (2.0 * x)),
                )],
                direct: Box::new(move |x, s| {
                    let f0 = c(s.d(0));
                    Ok((v_direct(x, s)?, (-1.0 / (2.0 * x * x)) * f0 * f0))
                }),
                depth: 2,
            })
        }
        (IntegralBigV, ModelFamily::Spherical { n }, Solution::Spherical { f, derivs, .. }) => {
            let f_sq = (f * f).compile();
            let v_ev = symbolic_v(f).compile();
            let nf = n as f64;
            let c6 = 6.0 * nf * (nf - 1.0);
            let boundary = spherical_v_boundary(n)?;
            let d0 = &derivs[0];
            let d1 = &derivs[1];
            let d2 = &derivs[2];
            let g1_stable: Integrand = Box::new(move |t| Ok(-c6 * (nf + 2.0) * f_sq.eval_over_power(t, 2 * n + 5)?));
            let g1_generic: Integrand = Box::new(move |t| {
                let m = Mv::new(&model.values(t)?);
                let (a2, _) = a23(&m);
                let ft = d0.eval(t)?;
                Ok(0.5 * ft * ft * (a2 * m.p + a2_prime(&m)).v * libm::exp((model.fns.big_p)(t)))
            });
            let g2_stable: Integrand = Box::new(move |t| Ok(c6 * v_ev.eval_over_power(t, 2 * n + 3)?));
            let g2_generic: Integrand = Box::new(move |t| {
                let m = Mv::new(&model.values(t)?);
                let (_, a3) = a23(&m);
                let (f0, f1, f2) = (d0.eval(t)?, d1.eval(t)?, d2.eval(t)?);
                Ok(a3.v * (f1 * f1 - f2 * f0) * libm::exp((model.fns.big_p)(t)))
            });
            let parts: Vec<(Integrand, Box<dyn Fn(f64) -> f64>)> = if c6 == 0.0 {
                // both integrands carry the factor 6n(n-1)
                Vec::new()
            } else {
                vec![
                    (generic_or(g1_stable, g1_generic), Box::new(move |x| -e_minus_p(x))),
                    (generic_or(g2_stable, g2_generic), Box::new(e_minus_p)),
                ]
            };
            Ok(IntegralPlan {
                parts,
                direct: Box::new(move |x, s| {
                    let m = Mv::new(&model.values(x)?);
                    let fs = Fs::new(s, 2)?;
                    let (a2, _) = a23(&m);
                    let f0 = c(s.d(0));
                    Ok((big_v(&m, &fs), 0.5 * f0 * f0 * a2 + e_minus_p(x) * c(boundary)))
                }),
                depth: 2,
            })
        }
        (EqVPositive, ModelFamily::Spherical { n }, Solution::Spherical { f, .. }) => {
            let f_sq = (f * f).compile();
            let v_ev = symbolic_v(f).compile();
            let nf = n as f64;
            let c6 = 6.0 * nf * (nf - 1.0);
            Ok(IntegralPlan {
                parts: vec![
                    (
                        Box::new(move |t| f_sq.eval_over_power(t, 2 * n + 5)),
                        Box::new(move |x| (nf + 2.0) * libm::pow(x, 2.0 * nf)),
                    ),
                    (
                        Box::new(move |t| v_ev.eval_over_power(t, 2 * n + 3)),
                        Box::new(move |x| libm::pow(x, 2.0 * nf)),
                    ),
                ],
                direct: Box::new(move |x, s| {
                    let m = Mv::new(&model.values(x)?);
                    let fs = Fs::new(s, 2)?;
                    let f0 = c(s.d(0));
                    Ok(((1.0 / c6) * big_v(&m, &fs), (1.0 / (2.0 * x * x * x * x)) * f0 * f0))
                }),
                depth: 2,
            })
        }
        _ => Err(Error::usage(format!("{id} has no integral representation for model {}", model.name()))),
    }
}

fn integral_residuals(
    id: IdentityId,
    model: &CoeffModel,
    sol: &Solution,
    nodes: &[f64],
    qtol: f64,
) -> Result<Vec<(f64, Residual)>> {
    let plan = plan(id, model, sol)?;
    let mut with_origin = Vec::with_capacity(nodes.len() + 1);
    with_origin.push(0.0);
    with_origin.extend_from_slice(nodes);
    let mut integrals = Vec::with_capacity(plan.parts.len());
    for (g, _) in &plan.parts {
        integrals.push(quad::cumulative(g, &with_origin, qtol)?);
    }
    let mut out = Vec::with_capacity(nodes.len());
    for (i, &x) in nodes.iter().enumerate() {
        let s = sol.stack(x, plan.depth)?;
        let (lhs, mut rhs) = (plan.direct)(x, &s)?;
        for ((_, pre), ints) in plan.parts.iter().zip(&integrals) {
            rhs = rhs + c(pre(x) * ints[i + 1]);
        }
        out.push((x, Residual::from_sides(lhs, rhs)));
    }
    Ok(out)
}

/// Checks an integral representation at a single point `x`, integrating
/// from 0 with relative quadrature tolerance derived from `tol`.
pub fn integral_check(
    id: IdentityId,
    model: &CoeffModel,
    sol: &Solution,
    x: f64,
    tol: f64,
) -> Result<VerificationReport> {
    if id.kind() != IdentityKind::Integral {
        return Err(Error::usage(format!("{id} is not an integral identity")));
    }
    if !(tol > 0.0) {
        return Err(Error::usage("tolerance must be positive"));
    }
    if let Some(why) = not_applicable(id, model, sol) {
        return Err(Error::usage(format!("{id} does not apply to model {}: {why}", model.name())));
    }
    model.check_domain(x)?;
    verify_identity(id, model, sol, &GridSpec::point(x)?, Some(tol))
}
