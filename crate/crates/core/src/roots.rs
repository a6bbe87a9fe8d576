//! Bracketing root finder: a uniform scan for sign changes, then bisection
//! followed by an Illinois-safeguarded secant iteration.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum ZeroKind {
    Function,
    Derivative,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ZeroBracket {
    pub lo: f64,
    pub hi: f64,
    pub kind: ZeroKind,
    /// 1-based position among the positive zeros.
    pub index: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ZeroResult {
    pub value: f64,
    /// `|f(value)| / max(1, |f'(value)|)`, the slope from a central difference.
    pub residual: f64,
    pub iterations: usize,
    pub bracket: ZeroBracket,
}

/// Where and how finely to look for zeros.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanOptions {
    pub start: f64,
    pub step: f64,
    pub cap: f64,
    /// Residual tolerance on the refined zero.
    pub tol: f64,
}

impl ScanOptions {
    fn validate(&self) -> Result<()> {
        let ok = self.start.is_finite()
            && self.step.is_finite()
            && self.cap.is_finite()
            && self.step > 0.0
            && self.cap > self.start
            && self.tol > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::usage(format!("invalid scan options {self:?}")))
        }
    }
}

const MAX_REFINE_ITERATIONS: usize = 300;
const INITIAL_BISECTIONS: usize = 4;
/// Sub-samples per bracket in the post-hoc check for skipped zeros.
const VERIFY_SAMPLES: usize = 8;

/// Finds the first `count` sign changes of `f` on `[start, cap]`.
///
/// An exact zero at a grid point is returned as a degenerate bracket
/// `(x, x)`.
pub fn scan_brackets<F>(f: &F, opts: &ScanOptions, count: usize) -> Result<Vec<(f64, f64)>>
where
    F: Fn(f64) -> Result<f64>,
{
    opts.validate()?;
    let mut out = Vec::with_capacity(count);
    if count == 0 {
        return Ok(out);
    }
    let mut x0 = opts.start;
    let mut f0 = f(x0)?;
    if f0 == 0.0 {
        out.push((x0, x0));
        x0 += opts.step * 1e-6;
        f0 = f(x0)?;
    }
    let mut i = 1u64;
    while out.len() < count {
        let x1 = opts.start + opts.step * i as f64;
        if x1 > opts.cap {
            return Err(Error::numerical(format!(
                "found {} of {count} sign changes below the scan cap {}",
                out.len(),
                opts.cap
            )));
        }
        let f1 = f(x1)?;
        if !f1.is_finite() {
            return Err(Error::numerical(format!("non-finite value at x = {x1}")));
        }
        if f1 == 0.0 {
            out.push((x1, x1));
            // Assume a simple zero and carry the opposite sign forward.
            f0 = -f0;
        } else {
            if f0.signum() != f1.signum() {
                out.push((x0, x1));
            }
            f0 = f1;
        }
        x0 = x1;
        i += 1;
    }
    Ok(out)
}

/// Refines a sign change of `f` on `[lo, hi]` to full double precision.
/// Returns the zero and the iteration count.
pub fn refine<F>(f: &F, lo: f64, hi: f64) -> Result<(f64, usize)>
where
    F: Fn(f64) -> Result<f64>,
{
    if lo == hi {
        return Ok((lo, 0));
    }
    if !(lo < hi) {
        return Err(Error::usage(format!("invalid bracket [{lo}, {hi}]")));
    }
    let (mut a, mut b) = (lo, hi);
    let (mut fa, mut fb) = (f(a)?, f(b)?);
    if fa == 0.0 {
        return Ok((a, 0));
    }
    if fb == 0.0 {
        return Ok((b, 0));
    }
    if fa.signum() == fb.signum() {
        return Err(Error::numerical(format!("no sign change on [{lo}, {hi}]")));
    }
    let mut side = 0i8;
    let mut width_checkpoint = b - a;
    for it in 1..=MAX_REFINE_ITERATIONS {
        if b - a <= 4.0 * f64::EPSILON * a.abs().max(b.abs()) {
            let x = if fa.abs() < fb.abs() { a } else { b };
            return Ok((x, it));
        }
        let mid = 0.5 * (a + b);
        let mut x = if it <= INITIAL_BISECTIONS {
            mid
        } else {
            b - fb * (b - a) / (fb - fa)
        };
        if it % 4 == 0 {
            if b - a > 0.5 * width_checkpoint {
                x = mid;
            }
            width_checkpoint = b - a;
        }
        if !(x > a && x < b) {
            x = mid;
        }
        let fx = f(x)?;
        if fx == 0.0 {
            return Ok((x, it));
        }
        if fx.signum() == fa.signum() {
            a = x;
            fa = fx;
            if side == -1 {
                fb *= 0.5;
            }
            side = -1;
        } else {
            b = x;
            fb = fx;
            if side == 1 {
                fa *= 0.5;
            }
            side = 1;
        }
    }
    Err(Error::numerical(format!(
        "root refinement on [{lo}, {hi}] did not converge"
    )))
}

fn residual_at<F>(f: &F, x: f64, lo: f64, hi: f64) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    let fx = f(x)?;
    let h = (1e-6 * x.abs()).max(1e-9).min(0.5 * (hi - lo).max(1e-9));
    let slope = (f(x + h)? - f(x - h)?) / (2.0 * h);
    Ok(fx.abs() / slope.abs().max(1.0))
}

fn verify_single_change<F>(f: &F, lo: f64, hi: f64) -> Result<()>
where
    F: Fn(f64) -> Result<f64>,
{
    let mut changes = 0;
    let mut prev = f(lo)?;
    for i in 1..=VERIFY_SAMPLES {
        let x = lo + (hi - lo) * i as f64 / VERIFY_SAMPLES as f64;
        let cur = f(x)?;
        if cur != 0.0 && prev != 0.0 && cur.signum() != prev.signum() {
            changes += 1;
        }
        if cur != 0.0 {
            prev = cur;
        }
    }
    if changes > 1 {
        return Err(Error::numerical(format!(
            "several zeros inside [{lo}, {hi}]; the scan step is too coarse"
        )));
    }
    Ok(())
}

/// The `k`-th zero (1-based) of `f` at or after `opts.start`.
pub fn kth_zero<F>(f: &F, k: usize, kind: ZeroKind, opts: &ScanOptions) -> Result<ZeroResult>
where
    F: Fn(f64) -> Result<f64>,
{
    Ok(first_zeros(f, k, kind, opts)?.pop().expect("k >= 1"))
}

/// The first `count` zeros of `f` at or after `opts.start`, increasing.
pub fn first_zeros<F>(f: &F, count: usize, kind: ZeroKind, opts: &ScanOptions) -> Result<Vec<ZeroResult>>
where
    F: Fn(f64) -> Result<f64>,
{
    if count == 0 {
        return Err(Error::usage("zero index must be at least 1"));
    }
    let brackets = scan_brackets(f, opts, count)?;
    let mut out = Vec::with_capacity(count);
    for (i, &(lo, hi)) in brackets.iter().enumerate() {
        if lo < hi {
            verify_single_change(f, lo, hi)?;
        }
        let (value, iterations) = refine(f, lo, hi)?;
        let residual = residual_at(f, value, lo, hi)?;
        if !(residual <= opts.tol) {
            return Err(Error::numerical(format!(
                "zero {} at {value} has residual {residual:e} above {:e}",
                i + 1,
                opts.tol
            )));
        }
        out.push(ZeroResult {
            value,
            residual,
            iterations,
            bracket: ZeroBracket {
                lo,
                hi,
                kind,
                index: i + 1,
            },
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opts(start: f64, cap: f64) -> ScanOptions {
        ScanOptions {
            start,
            step: core::f64::consts::FRAC_PI_8,
            cap,
            tol: 1e-12,
        }
    }

    #[test]
    fn zeros_of_sine() {
        let f = |x: f64| Ok(libm::sin(x));
        let z = first_zeros(&f, 3, ZeroKind::Function, &opts(0.1, 20.0)).unwrap();
        for (i, r) in z.iter().enumerate() {
            let want = core::f64::consts::PI * (i + 1) as f64;
            assert!((r.value - want).abs() < 1e-14 * want, "{r:?}");
            assert!(r.bracket.lo <= r.value && r.value <= r.bracket.hi);
            assert_eq!(r.bracket.index, i + 1);
        }
    }

    #[test]
    fn first_zero_of_f1_by_bisection_oracle() {
        let f = |x: f64| Ok(libm::sin(x) - x * libm::cos(x));
        // plain bisection as the independent reference
        let (mut a, mut b) = (4.0f64, 5.0f64);
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if (libm::sin(m) - m * libm::cos(m)) > 0.0 {
                a = m;
            } else {
                b = m;
            }
        }
        let r = kth_zero(&f, 1, ZeroKind::Function, &opts(0.5, 20.0)).unwrap();
        assert!((r.value - a).abs() < 1e-13);
        assert!((r.value - 4.4934094579).abs() < 1e-9);
    }

    #[test]
    fn missing_bracket_is_numerical_failure() {
        let f = |x: f64| Ok(1.0 + x * x);
        let e = kth_zero(&f, 1, ZeroKind::Function, &opts(0.1, 5.0)).unwrap_err();
        assert!(matches!(e, Error::Numerical(_)));
    }

    #[test]
    fn secant_handles_flat_sides() {
        // Illinois must not stall on a strongly convex function.
        let f = |x: f64| Ok(libm::exp(x) - 1e4);
        let (x, it) = refine(&f, 0.0, 20.0).unwrap();
        assert!((x - libm::log(1e4)).abs() < 1e-13);
        assert!(it < 100);
    }

    #[test]
    fn two_zeros_in_one_step_are_detected() {
        let f = |x: f64| Ok((x - 0.8) * (x - 1.0) * (x - 1.3));
        let o = ScanOptions {
            start: 0.5,
            step: 1.0,
            cap: 3.0,
            tol: 1e-12,
        };
        assert!(first_zeros(&f, 1, ZeroKind::Function, &o).is_err());
    }
}
