//! Bessel functions of the first kind of real order, by power series.
//!
//! `J_nu^{(m)}(x) = c_nu x^{nu-m} S_m(x)` with `c_nu = 2^{-nu}/Gamma(nu+1)` and
//!
//! ```text
//! S_m(x) = sum_k t_k F_m(2k + nu),   t_k = (-x^2/4)^k / (k! (nu+1)_k)
//! ```
//!
//! where `F_m(a) = a (a-1) ... (a-m+1)` is the falling factorial. The sums
//! are accumulated in double-double, so the only loss is the cancellation
//! `max_k |t_k| / |S_0|`, which stays below 1e12 for `x <= 30`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::dd::Dd;
use crate::error::{Error, Result};
use crate::roots::{first_zeros, ScanOptions, ZeroKind, ZeroResult};
use crate::trigpoly::spherical_fn;

pub const DEFAULT_SERIES_TOL: f64 = 1e-14;
pub const DEFAULT_ROOT_TOL: f64 = 1e-12;
pub const TERM_CAP: usize = 500;
pub const ZERO_SCAN_STEP: f64 = core::f64::consts::FRAC_PI_8;
/// Zeros are searched on `[max(nu, tol), nu + ZERO_SCAN_SPAN]` by default.
pub const ZERO_SCAN_SPAN: f64 = 40.0;

/// A validated order `nu >= 0`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct BesselOrder(f64);

impl BesselOrder {
    pub fn new(nu: f64) -> Result<Self> {
        if nu.is_finite() && nu >= 0.0 {
            Ok(BesselOrder(nu))
        } else {
            Err(Error::usage(format!("Bessel order must be finite and >= 0, got {nu}")))
        }
    }

    /// Half-integer order `n + 1/2`.
    pub fn half_integer(n: usize) -> Self {
        BesselOrder(n as f64 + 0.5)
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// Gamma function by the Lanczos approximation (g = 7, 9 terms), with
/// reflection below 1/2.
pub fn gamma(x: f64) -> f64 {
    if x < 0.5 {
        let s = libm::sin(core::f64::consts::PI * x);
        return core::f64::consts::PI / (s * gamma(1.0 - x));
    }
    if x == libm::floor(x) && x <= 30.0 {
        // exact factorials for small integers
        return (2..x as u32).fold(1.0, |acc, k| acc * f64::from(k));
    }
    let z = x - 1.0;
    let mut acc = LANCZOS[0];
    for (i, &c) in LANCZOS.iter().enumerate().skip(1) {
        acc += c / (z + i as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    // split the power to postpone overflow
    let half = libm::pow(t, 0.5 * (z + 0.5));
    libm::sqrt(2.0 * core::f64::consts::PI) * half * libm::exp(-t) * half * acc
}

/// Converged sums `S_0..S_m` at `x`.
fn series_sums(nu: f64, x: f64, m: usize, tol: f64) -> Result<Vec<Dd>> {
    if !(tol > 0.0) {
        return Err(Error::usage("series tolerance must be positive"));
    }
    let xd = Dd::new(x);
    let z = -(xd * xd).mul_f64(0.25);
    let nu_d = Dd::new(nu);
    let mut sums = vec![Dd::ZERO; m + 1];
    let mut t = Dd::ONE;
    let mut peak = 0.0f64;
    for k in 0..TERM_CAP {
        // F_i(2k + nu) for i = 0..m
        let a = nu_d.add_f64(2.0 * k as f64);
        let mut fall = Dd::ONE;
        let mut biggest = 0.0f64;
        for (i, s) in sums.iter_mut().enumerate() {
            let term = t * fall;
            *s += term;
            biggest = biggest.max(term.hi.abs());
            fall = fall * a.add_f64(-(i as f64));
        }
        peak = peak.max(biggest);
        if x == 0.0 {
            return Ok(sums);
        }
        let kk = (k + 1) as f64;
        let denom = nu_d.add_f64(kk).mul_f64(kk);
        let ratio = z.hi.abs() / denom.hi;
        t = t * z / denom;
        // Past the peak the terms fall faster than geometrically, so twice
        // the current term bounds the tail; below 1e-32 of the peak further
        // terms cannot change a double-double sum.
        if ratio < 0.5 {
            let tail = 2.0 * biggest;
            if sums.iter().all(|s| tail <= (tol * s.hi.abs()).max(1e-32 * peak)) {
                return Ok(sums);
            }
        }
    }
    Err(Error::numerical(format!(
        "Bessel series for nu = {nu}, x = {x} did not converge in {TERM_CAP} terms"
    )))
}

fn prefactor(nu: f64) -> f64 {
    libm::pow(2.0, -nu) / gamma(nu + 1.0)
}

/// `x^{-power} J_nu^{(m)}(x)` for m = 0..=max_order, stable as `x -> 0`.
pub fn bessel_stack_over_power(
    nu: BesselOrder,
    x: f64,
    max_order: usize,
    power: usize,
    tol: f64,
) -> Result<Vec<f64>> {
    let nu = nu.value();
    if !(x >= 0.0) || !x.is_finite() {
        return Err(Error::usage(format!("Bessel argument must be finite and >= 0, got {x}")));
    }
    let sums = series_sums(nu, x, max_order, tol)?;
    let c = prefactor(nu);
    let mut out = Vec::with_capacity(max_order + 1);
    for (m, s) in sums.iter().enumerate() {
        let e = nu - m as f64 - power as f64;
        let v = s.to_f64();
        let val = if x == 0.0 {
            if v == 0.0 || e > 0.0 {
                0.0
            } else if e == 0.0 {
                c * v
            } else {
                return Err(Error::singular(0.0, format!("J_{nu}^({m})/x^{power} is unbounded at 0")));
            }
        } else {
            c * libm::pow(x, e) * v
        };
        if !val.is_finite() {
            return Err(Error::numerical(format!("overflow in J_{nu}^({m}) at x = {x}")));
        }
        out.push(val);
    }
    Ok(out)
}

/// `J_nu(x), J_nu'(x), ..., J_nu^{(m)}(x)`.
pub fn bessel_stack(nu: BesselOrder, x: f64, m: usize, tol: f64) -> Result<Vec<f64>> {
    bessel_stack_over_power(nu, x, m, 0, tol)
}

pub fn bessel_j(nu: BesselOrder, x: f64, tol: f64) -> Result<f64> {
    Ok(bessel_stack(nu, x, 0, tol)?[0])
}

/// First or second derivative of `J_nu` by the termwise differentiated series.
pub fn bessel_j_deriv(nu: BesselOrder, x: f64, order: usize, tol: f64) -> Result<f64> {
    if !(order == 1 || order == 2) {
        return Err(Error::usage(format!("derivative order must be 1 or 2, got {order}")));
    }
    if !(x > 0.0) {
        return Err(Error::usage(format!("derivative needs x > 0, got {x}")));
    }
    Ok(bessel_stack(nu, x, order, tol)?[order])
}

/// `sqrt(pi/2) x^{n+1/2} J_{n+1/2}(x)`, the series route to `f_n`.
pub fn spherical_from_series(n: usize, x: f64, tol: f64) -> Result<f64> {
    let nu = BesselOrder::half_integer(n);
    let j = bessel_j(nu, x, tol)?;
    Ok(libm::sqrt(core::f64::consts::FRAC_PI_2) * libm::pow(x, nu.value()) * j)
}

/// Scan used by [`bessel_zero`]: `[max(nu, tol), nu + 40]` in steps of pi/8.
pub fn default_scan(nu: f64, tol: f64) -> ScanOptions {
    ScanOptions {
        start: nu.max(tol),
        step: ZERO_SCAN_STEP,
        cap: nu + ZERO_SCAN_SPAN,
        tol,
    }
}

/// The first `count` positive zeros of `J_nu` within `[start, cap]`.
pub fn bessel_zeros_with(nu: BesselOrder, count: usize, opts: &ScanOptions) -> Result<Vec<ZeroResult>> {
    let f = |x: f64| bessel_j(nu, x, DEFAULT_SERIES_TOL);
    first_zeros(&f, count, ZeroKind::Function, opts)
}

/// The first `count` positive zeros of `J_nu'` within `[start, cap]`.
pub fn bessel_deriv_zeros_with(nu: BesselOrder, count: usize, opts: &ScanOptions) -> Result<Vec<ZeroResult>> {
    if !(nu.value() > 0.0) {
        return Err(Error::usage("derivative zeros need nu > 0"));
    }
    let f = |x: f64| bessel_j_deriv(nu, x, 1, DEFAULT_SERIES_TOL);
    let zs = first_zeros(&f, count, ZeroKind::Derivative, opts)?;
    if let Some(z) = zs.iter().find(|z| z.value <= nu.value()) {
        return Err(Error::numerical(format!(
            "derivative zero {} = {} does not exceed nu = {}",
            z.bracket.index,
            z.value,
            nu.value()
        )));
    }
    Ok(zs)
}

/// `j_{nu,k}` with the default scan.
pub fn bessel_zero(nu: BesselOrder, k: usize, tol: f64) -> Result<ZeroResult> {
    let mut zs = bessel_zeros_with(nu, k, &default_scan(nu.value(), tol))?;
    Ok(zs.pop().expect("k >= 1"))
}

/// `j'_{nu,k}` with the default scan.
pub fn bessel_deriv_zero(nu: BesselOrder, k: usize, tol: f64) -> Result<ZeroResult> {
    let mut zs = bessel_deriv_zeros_with(nu, k, &default_scan(nu.value(), tol))?;
    Ok(zs.pop().expect("k >= 1"))
}

fn spherical_scan(start: f64, tol: f64) -> ScanOptions {
    ScanOptions {
        start: start.max(ZERO_SCAN_STEP),
        step: ZERO_SCAN_STEP,
        cap: start + ZERO_SCAN_SPAN,
        tol,
    }
}

/// `j_k(f_n)`, found by bracketing the closed form of `f_n`.
pub fn spherical_zero(n: usize, k: usize, tol: f64) -> Result<ZeroResult> {
    let ev = spherical_fn(n)?.compile();
    let f = |x: f64| ev.eval(x);
    let mut zs = first_zeros(&f, k, ZeroKind::Function, &spherical_scan(n as f64 + 0.5, tol))?;
    Ok(zs.pop().expect("k >= 1"))
}

/// `j_k(f_n')`, found by bracketing the closed form of `f_n'`.
pub fn spherical_deriv_zero(n: usize, k: usize, tol: f64) -> Result<ZeroResult> {
    let ev = spherical_fn(n)?.diff().compile();
    let f = |x: f64| ev.eval(x);
    let start = (n as f64 - 0.5).max(0.0);
    let mut zs = first_zeros(&f, k, ZeroKind::Derivative, &spherical_scan(start, tol))?;
    Ok(zs.pop().expect("k >= 1"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::PI;

    fn order(nu: f64) -> BesselOrder {
        BesselOrder::new(nu).unwrap()
    }

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn gamma_at_integers_and_half_integers() {
        let mut fact = 1.0;
        for n in 1..20 {
            assert!(rel(gamma(n as f64), fact) < 1e-13, "n={n}");
            fact *= n as f64;
        }
        // Gamma(n + 1/2) = (2n)! sqrt(pi) / (4^n n!)
        let mut want = PI.sqrt();
        for n in 0..15 {
            assert!(rel(gamma(n as f64 + 0.5), want) < 1e-13, "n={n}");
            want *= n as f64 + 0.5;
        }
    }

    #[test]
    fn order_validation() {
        assert!(BesselOrder::new(-0.5).is_err());
        assert!(BesselOrder::new(f64::NAN).is_err());
    }

    #[test]
    fn values_at_zero() {
        assert_eq!(bessel_j(order(0.0), 0.0, 1e-14).unwrap(), 1.0);
        assert_eq!(bessel_j(order(2.5), 0.0, 1e-14).unwrap(), 0.0);
    }

    #[test]
    fn half_order_is_elementary() {
        for &x in &[0.3, 1.0, 4.0, 17.0, 29.0] {
            let want = (2.0 / (PI * x)).sqrt() * libm::sin(x);
            let got = bessel_j(order(0.5), x, 1e-15).unwrap();
            assert!((got - want).abs() < 1e-14 * want.abs().max(1e-3), "x={x}");
        }
        assert!(bessel_j(order(0.5), PI, 1e-14).unwrap().abs() < 1e-13);
    }

    #[test]
    fn integer_orders_match_reference_values() {
        // J_0(1), J_1(2.5), J_2(10) to 16 digits
        let cases = [
            (0.0, 1.0, 0.765_197_686_557_966_6),
            (1.0, 2.5, 0.497_094_102_464_274_4),
            (2.0, 10.0, 0.254_630_313_685_120_7),
        ];
        for (nu, x, want) in cases {
            assert!(rel(bessel_j(order(nu), x, 1e-15).unwrap(), want) < 1e-14, "nu={nu}");
        }
    }

    #[test]
    fn derivative_at_zero_and_ode() {
        assert!(bessel_j_deriv(order(0.0), 1e-12, 1, 1e-14).unwrap().abs() < 1e-11);
        let (nu, x) = (2.0, 3.0);
        let s = bessel_stack(order(nu), x, 2, 1e-15).unwrap();
        let r = s[2] + s[1] / x + (1.0 - nu * nu / (x * x)) * s[0];
        assert!(r.abs() < 1e-11);
        assert!(bessel_j_deriv(order(1.0), 2.0, 3, 1e-14).is_err());
    }

    #[test]
    fn derivative_matches_recurrence() {
        // J_nu' = J_{nu-1} - (nu/x) J_nu
        for &(nu, x) in &[(1.5, 0.7), (3.4, 6.0), (2.0, 25.0)] {
            let d = bessel_j_deriv(order(nu), x, 1, 1e-15).unwrap();
            let r = bessel_j(order(nu - 1.0), x, 1e-15).unwrap() - nu / x * bessel_j(order(nu), x, 1e-15).unwrap();
            assert!((d - r).abs() < 1e-13, "nu={nu} x={x}");
        }
    }

    #[test]
    fn series_matches_spherical_closed_form() {
        let f2 = spherical_fn(2).unwrap();
        let a = spherical_from_series(2, 3.0, 1e-15).unwrap();
        assert!(rel(a, f2.eval(3.0).unwrap()) < 1e-12);
    }

    #[test]
    fn over_power_is_continuous_at_zero() {
        let nu = order(2.0);
        let at0 = bessel_stack_over_power(nu, 0.0, 0, 2, 1e-15).unwrap()[0];
        assert!(rel(at0, 0.125) < 1e-14);
        let near = bessel_stack_over_power(nu, 1e-4, 0, 2, 1e-15).unwrap()[0];
        assert!((near - at0).abs() < 1e-9);
        assert!(bessel_stack_over_power(nu, 0.0, 0, 3, 1e-15).is_err());
    }

    #[test]
    fn first_zeros() {
        let z = bessel_zero(order(0.5), 1, 1e-12).unwrap();
        assert!((z.value - PI).abs() < 1e-12);
        let z = bessel_zero(order(1.5), 1, 1e-12).unwrap();
        assert!((z.value - 4.4934094579).abs() < 1e-9);
        let z0 = bessel_zero(order(0.0), 1, 1e-12).unwrap();
        assert!((z0.value - 2.404_825_557_695_773).abs() < 1e-12);
        let z2 = bessel_zero(order(0.0), 2, 1e-12).unwrap();
        assert!(z2.value > z0.value);
    }

    #[test]
    fn interlacing_for_two_and_a_half() {
        let a = bessel_zero(order(2.5), 1, 1e-12).unwrap().value;
        let b = bessel_zero(order(3.5), 1, 1e-12).unwrap().value;
        let c = bessel_zero(order(2.5), 2, 1e-12).unwrap().value;
        assert!(a < b && b < c);
    }

    #[test]
    fn derivative_zeros() {
        // tan x = 2x for nu = 1/2
        let (mut lo, mut hi) = (1.0f64, 1.5f64);
        for _ in 0..200 {
            let m = 0.5 * (lo + hi);
            if libm::tan(m) - 2.0 * m < 0.0 {
                lo = m;
            } else {
                hi = m;
            }
        }
        let z = bessel_deriv_zero(order(0.5), 1, 1e-12).unwrap();
        assert!((z.value - lo).abs() < 1e-12);
        assert!((z.value - 1.1655612).abs() < 1e-7);

        let j = bessel_zero(order(1.5), 1, 1e-12).unwrap().value;
        let d = bessel_deriv_zero(order(1.5), 1, 1e-12).unwrap().value;
        assert!(1.5 < d && d < j);
        assert!(bessel_deriv_zero(order(0.0), 1, 1e-12).is_err());
    }

    #[test]
    fn simple_zero_has_nonzero_slope() {
        let z = bessel_zero(order(3.4), 1, 1e-12).unwrap();
        assert!(bessel_j_deriv(order(3.4), z.value, 1, 1e-14).unwrap().abs() > 1e-3);
    }

    #[test]
    fn spherical_zeros_match_bessel_zeros() {
        for n in 0..=8 {
            let a = spherical_zero(n, 1, 1e-12).unwrap().value;
            let b = bessel_zero(BesselOrder::half_integer(n), 1, 1e-12).unwrap().value;
            assert!((a - b).abs() < 1e-9, "n={n}");
        }
        for n in 1..=8 {
            let a = spherical_deriv_zero(n, 1, 1e-12).unwrap().value;
            let b = bessel_zero(BesselOrder::half_integer(n - 1), 1, 1e-12).unwrap().value;
            assert!((a - b).abs() < 1e-9, "n={n}");
        }
    }
}
