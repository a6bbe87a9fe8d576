//! Adaptive Simpson quadrature with the Richardson correction.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Subdivision cap, counted in integrand evaluations.
pub const MAX_EVALUATIONS: usize = 4_000_000;
const MAX_DEPTH: u32 = 60;
const INITIAL_PANELS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub error_estimate: f64,
    /// Approximate `integral |f|`, the scale the tolerance is relative to.
    pub abs_scale: f64,
    pub evaluations: usize,
}

struct Panel {
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

/// `int_a^b f` to an estimated error below `tol * int_a^b |f|`.
pub fn adaptive_simpson<F>(f: &F, a: f64, b: f64, tol: f64) -> Result<QuadResult>
where
    F: Fn(f64) -> Result<f64>,
{
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::usage(format!("integration limits must be finite: [{a}, {b}]")));
    }
    if !(tol > 0.0) {
        return Err(Error::usage("quadrature tolerance must be positive"));
    }
    if a == b {
        return Ok(QuadResult {
            value: 0.0,
            error_estimate: 0.0,
            abs_scale: 0.0,
            evaluations: 0,
        });
    }
    let evals = core::cell::Cell::new(0usize);
    let eval = |x: f64| -> Result<f64> {
        evals.set(evals.get() + 1);
        let v = f(x)?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::numerical(format!("integrand is not finite at t = {x}")))
        }
    };

    // coarse pass: panels and the |f| scale
    let h = (b - a) / INITIAL_PANELS as f64;
    let mut panels = Vec::with_capacity(INITIAL_PANELS);
    let mut fa = eval(a)?;
    let mut abs_scale = 0.0;
    for i in 0..INITIAL_PANELS {
        let pa = a + h * i as f64;
        let pb = if i + 1 == INITIAL_PANELS { b } else { pa + h };
        let fm = eval(0.5 * (pa + pb))?;
        let fb = eval(pb)?;
        abs_scale += simpson(pa, pb, fa.abs(), fm.abs(), fb.abs()).abs();
        panels.push((pa, pb, fa, fm, fb));
        fa = fb;
    }
    let target = tol * abs_scale;
    let mut stack: Vec<Panel> = panels
        .into_iter()
        .map(|(pa, pb, fa, fm, fb)| Panel {
            a: pa,
            b: pb,
            fa,
            fm,
            fb,
            whole: simpson(pa, pb, fa, fm, fb),
            tol: target / INITIAL_PANELS as f64,
            depth: 0,
        })
        .collect();

    let mut value = crate::dd::Dd::ZERO;
    let mut err = 0.0;
    while let Some(p) = stack.pop() {
        let m = 0.5 * (p.a + p.b);
        let lm = eval(0.5 * (p.a + m))?;
        let rm = eval(0.5 * (m + p.b))?;
        let left = simpson(p.a, m, p.fa, lm, p.fm);
        let right = simpson(m, p.b, p.fm, rm, p.fb);
        let diff = left + right - p.whole;
        if diff.abs() <= 15.0 * p.tol {
            value += crate::dd::Dd::new(left + right + diff / 15.0);
            err += diff.abs() / 15.0;
            continue;
        }
        if p.depth >= MAX_DEPTH || evals.get() > MAX_EVALUATIONS {
            return Err(Error::numerical(format!(
                "quadrature on [{a}, {b}] did not converge (stuck near t = {m})"
            )));
        }
        stack.push(Panel {
            a: p.a,
            b: m,
            fa: p.fa,
            fm: lm,
            fb: p.fm,
            whole: left,
            tol: 0.5 * p.tol,
            depth: p.depth + 1,
        });
        stack.push(Panel {
            a: m,
            b: p.b,
            fa: p.fm,
            fm: rm,
            fb: p.fb,
            whole: right,
            tol: 0.5 * p.tol,
            depth: p.depth + 1,
        });
    }
    Ok(QuadResult {
        value: value.to_f64(),
        error_estimate: err,
        abs_scale,
        evaluations: evals.get(),
    })
}

/// `int_{nodes[0]}^{nodes[i]} f` for every node; nodes must be increasing.
pub fn cumulative<F>(f: &F, nodes: &[f64], tol: f64) -> Result<Vec<f64>>
where
    F: Fn(f64) -> Result<f64>,
{
    if nodes.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::usage("quadrature nodes must be strictly increasing"));
    }
    let mut out = Vec::with_capacity(nodes.len());
    let mut acc = crate::dd::Dd::ZERO;
    for (i, &x) in nodes.iter().enumerate() {
        if i > 0 {
            acc += crate::dd::Dd::new(adaptive_simpson(f, nodes[i - 1], x, tol)?.value);
        }
        out.push(acc.to_f64());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::PI;

    #[test]
    fn polynomials_up_to_cubic_are_exact() {
        let f = |x: f64| Ok(x * x * x - 2.0 * x + 1.0);
        let r = adaptive_simpson(&f, 0.0, 2.0, 1e-14).unwrap();
        assert!((r.value - 2.0).abs() < 1e-14);
    }

    #[test]
    fn oscillatory_integrand() {
        let f = |x: f64| Ok(libm::sin(x) * libm::sin(x));
        let r = adaptive_simpson(&f, 0.0, 10.0 * PI, 1e-12).unwrap();
        assert!((r.value - 5.0 * PI).abs() < 1e-10);
    }

    #[test]
    fn sharp_peak_needs_refinement() {
        let f = |x: f64| Ok(1.0 / (1e-4 + x * x));
        let r = adaptive_simpson(&f, -1.0, 1.0, 1e-11).unwrap();
        let want = 2.0 * libm::atan(1.0 / 1e-2) / 1e-2;
        assert!(((r.value - want) / want).abs() < 1e-10);
        assert!(r.evaluations > 100);
    }

    #[test]
    fn cumulative_matches_antiderivative() {
        let nodes: Vec<f64> = (0..=20).map(|i| 0.5 * i as f64).collect();
        let c = cumulative(&|x: f64| Ok(libm::exp(-x)), &nodes, 1e-12).unwrap();
        for (x, v) in nodes.iter().zip(&c) {
            assert!((v - (1.0 - libm::exp(-x))).abs() < 1e-12);
        }
    }

    #[test]
    fn non_finite_integrand_is_numerical_failure() {
        let f = |x: f64| Ok(1.0 / x);
        assert!(matches!(
            adaptive_simpson(&f, 0.0, 1.0, 1e-8),
            Err(Error::Numerical(_))
        ));
    }
}
