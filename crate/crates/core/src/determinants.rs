//! `v(f)`, `w(f)`, the Hankel determinant and the Wronskian minors of the
//! canonical basis `b_k = f_n^{(2n+1-k)}`.
//!
//! Minors are laid out with columns `u_j, u_{j+1}, ..., u_{2n+1}` and rows
//! of increasing derivative order, so entry `(r, c)` is `f_n^{(D - c + r)}`
//! with `D = 2n + 1 - j`. With this layout `w_{2n,2n+1} = v(f_n)` and
//! `w_{2n-1,2n+1} = w(f_n)`, both with sign +1.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::dd::Dd;
use crate::error::{Error, Result};
use crate::eval::TrigEval;
use crate::lu;
use crate::trigpoly::{spherical_fn, TrigPoly};

/// Largest `n` accepted by [`symbolic_minor`].
pub const SYMBOLIC_MAX_N: usize = 6;

/// `(f(x), f'(x), ..., f^(m)(x))` with `m >= 2`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct DerivStack {
    x: f64,
    values: Vec<f64>,
}

impl DerivStack {
    pub fn new(x: f64, values: Vec<f64>) -> Result<Self> {
        if values.len() < 3 {
            return Err(Error::usage(format!(
                "a derivative stack needs at least f, f', f'' (got {} values)",
                values.len()
            )));
        }
        if !x.is_finite() || values.iter().any(|v| !v.is_finite()) {
            return Err(Error::numerical(format!("non-finite derivative stack at x = {x}")));
        }
        Ok(DerivStack { x, values })
    }

    /// Exact derivatives of a ring element, evaluated in extended precision.
    pub fn from_trigpoly(f: &TrigPoly, x: f64, m: usize) -> Result<Self> {
        let evs: Vec<TrigEval> = f.derivatives(m).iter().map(TrigPoly::compile).collect();
        DerivStack::from_evals(&evs, x)
    }

    /// Stack from precompiled derivatives `f, f', ...`.
    pub fn from_evals(evs: &[TrigEval], x: f64) -> Result<Self> {
        let values = evs.iter().map(|e| e.eval(x)).collect::<Result<Vec<_>>>()?;
        DerivStack::new(x, values)
    }

    pub fn x(&self) -> f64 {
        self.x
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Highest derivative order `m`.
    pub fn depth(&self) -> usize {
        self.values.len() - 1
    }

    /// Errors unless the stack reaches `f^(m)`.
    pub fn require(&self, m: usize) -> Result<()> {
        if self.depth() >= m {
            Ok(())
        } else {
            Err(Error::usage(format!(
                "derivative stack has depth {} but {m} is needed",
                self.depth()
            )))
        }
    }

    #[inline]
    pub fn d(&self, i: usize) -> f64 {
        self.values[i]
    }

    fn dd(&self, i: usize) -> Dd {
        Dd::new(self.values[i])
    }
}

/// `f'^2 - f'' f`.
pub fn v_det(s: &DerivStack) -> f64 {
    v_dd(s).to_f64()
}

fn v_dd(s: &DerivStack) -> Dd {
    s.dd(1) * s.dd(1) - s.dd(2) * s.dd(0)
}

/// `det [[f'', f', f], [f''', f'', f'], [f'''', f''', f'']]`.
pub fn w_det(s: &DerivStack) -> Result<f64> {
    s.require(4)?;
    let (f0, f1, f2, f3, f4) = (s.dd(0), s.dd(1), s.dd(2), s.dd(3), s.dd(4));
    let w = f2 * (f2 * f2 - f1 * f3) - f1 * (f3 * f2 - f1 * f4) + f0 * (f3 * f3 - f2 * f4);
    Ok(w.to_f64())
}

/// Determinant of the Hankel matrix `(f^{(i+j)})_{i,j<3}`, which is `-w`.
pub fn hankel_det(s: &DerivStack) -> Result<f64> {
    s.require(4)?;
    let h: Vec<Dd> = (0..9).map(|i| s.dd(i / 3 + i % 3)).collect();
    Ok(lu::det(h, 3).to_f64())
}

/// Central-difference derivative of `g` at `x`, Richardson-extrapolated
/// over `halvings` halvings of the initial step `h0`.
pub fn richardson_derivative<G>(g: &G, x: f64, h0: f64, halvings: usize) -> Result<f64>
where
    G: Fn(f64) -> Result<f64>,
{
    if !(h0 > 0.0) {
        return Err(Error::usage("initial step must be positive"));
    }
    let mut table: Vec<f64> = Vec::with_capacity(halvings + 1);
    let mut h = h0;
    for i in 0..=halvings {
        let mut cur = (g(x + h)? - g(x - h)?) / (2.0 * h);
        let mut prev_row = core::mem::take(&mut table);
        let mut row = Vec::with_capacity(i + 1);
        row.push(cur);
        let mut factor = 4.0;
        for prev in prev_row.drain(..) {
            cur = cur + (cur - prev) / (factor - 1.0);
            row.push(cur);
            factor *= 4.0;
        }
        table = row;
        h *= 0.5;
    }
    Ok(*table.last().expect("table is never empty"))
}

/// The canonical basis `b_k = f_n^{(2n+1-k)}`, `k = 0..=2n+1`.
#[derive(Debug, Clone)]
pub struct CanonicalBasis {
    n: usize,
    basis: Vec<TrigPoly>,
}

impl CanonicalBasis {
    pub fn new(n: usize) -> Result<Self> {
        let top = 2 * n + 1;
        let mut basis = spherical_fn(n)?.derivatives(top);
        basis.reverse();
        Ok(CanonicalBasis { n, basis })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn basis(&self) -> &[TrigPoly] {
        &self.basis
    }

    /// Checks from exact coefficients that `b_k` vanishes to order exactly `k`.
    pub fn verify_orders(&self) -> Result<()> {
        for (k, b) in self.basis.iter().enumerate() {
            match b.order_at_zero() {
                Some(o) if o == k => {}
                o => {
                    return Err(Error::numerical(format!(
                        "b_{k} of the n = {} basis vanishes to order {o:?}",
                        self.n
                    )))
                }
            }
        }
        Ok(())
    }
}

fn check_minor_args(n: usize, j: usize) -> Result<(usize, usize)> {
    let top = 2 * n + 1;
    if !(2 * j > top && j <= top) {
        return Err(Error::usage(format!(
            "j = {j} is not admissible for n = {n}: need {} < j <= {top}",
            top as f64 / 2.0
        )));
    }
    // (size, D)
    Ok((top + 1 - j, top - j))
}

/// Precompiled numeric evaluator for one minor `w_{j,2n+1}`.
#[derive(Debug, Clone)]
pub struct MinorEvaluator {
    n: usize,
    j: usize,
    size: usize,
    top: usize,
    derivs: Vec<TrigEval>,
}

impl MinorEvaluator {
    pub fn new(n: usize, j: usize) -> Result<Self> {
        let (size, top) = check_minor_args(n, j)?;
        let derivs = spherical_fn(n)?
            .derivatives(top + size - 1)
            .iter()
            .map(TrigPoly::compile)
            .collect();
        Ok(MinorEvaluator {
            n,
            j,
            size,
            top,
            derivs,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn j(&self) -> usize {
        self.j
    }

    /// Matrix order `2n + 2 - j`.
    pub fn size(&self) -> usize {
        self.size
    }

    pub fn eval_dd(&self, x: f64) -> Result<Dd> {
        if !(x > 0.0) || !x.is_finite() {
            return Err(Error::usage(format!("minors are evaluated at finite x > 0, got {x}")));
        }
        let vals = self.derivs.iter().map(|e| e.eval_dd(x)).collect::<Result<Vec<_>>>()?;
        let s = self.size;
        let mut m = Vec::with_capacity(s * s);
        for r in 0..s {
            for c in 0..s {
                m.push(vals[self.top + r - c]);
            }
        }
        Ok(lu::det(m, s))
    }

    /// The minor together with the product of its row maxima, a bound on
    /// its size used as the noise reference.
    pub fn eval_scaled(&self, x: f64) -> Result<(f64, f64)> {
        let v = self.eval(x)?;
        let vals = self.derivs.iter().map(|e| e.eval(x)).collect::<Result<Vec<_>>>()?;
        let s = self.size;
        let scale = (0..s)
            .map(|r| (0..s).fold(0.0f64, |m, c| m.max(vals[self.top + r - c].abs())))
            .product();
        Ok((v, scale))
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        let v = self.eval_dd(x)?.to_f64();
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::numerical(format!("minor overflowed at x = {x}")))
        }
    }
}

/// `det W(u_j, ..., u_{2n+1})(x)` by extended-precision entries and LU.
pub fn wronskian_minor(n: usize, j: usize, x: f64) -> Result<f64> {
    MinorEvaluator::new(n, j)?.eval(x)
}

/// Exact determinant of a row-major `size x size` matrix over the ring,
/// by Laplace expansion with memoised column subsets.
pub fn symbolic_det(entries: &[TrigPoly], size: usize) -> TrigPoly {
    assert_eq!(entries.len(), size * size, "matrix is not {size}x{size}");
    // minors[mask] = det of rows 0..popcount(mask) restricted to columns in mask
    let mut minors: Vec<Option<TrigPoly>> = vec![None; 1 << size];
    minors[0] = Some(TrigPoly::one());
    for mask in 0usize..(1 << size) {
        let Some(cur) = minors[mask].take() else {
            continue;
        };
        let row = mask.count_ones() as usize;
        if row == size {
            minors[mask] = Some(cur);
            continue;
        }
        for c in 0..size {
            if mask & (1 << c) != 0 {
                continue;
            }
            let a = &entries[row * size + c];
            if a.is_zero() {
                continue;
            }
            let mut term = &cur * a;
            // inversions against rows already placed in higher columns
            if (mask >> (c + 1)).count_ones() % 2 == 1 {
                term = -term;
            }
            let next = mask | (1 << c);
            minors[next] = Some(match minors[next].take() {
                Some(acc) => &acc + &term,
                None => term,
            });
        }
    }
    minors[(1 << size) - 1].take().unwrap_or_else(TrigPoly::zero)
}

/// `w_{j,2n+1}` expanded exactly in the ring; `n <= 6`.
pub fn symbolic_minor(n: usize, j: usize) -> Result<TrigPoly> {
    if n > SYMBOLIC_MAX_N {
        return Err(Error::usage(format!(
            "symbolic minors are limited to n <= {SYMBOLIC_MAX_N}, got {n}"
        )));
    }
    let (size, top) = check_minor_args(n, j)?;
    let d = spherical_fn(n)?.derivatives(top + size - 1);
    let mut m = Vec::with_capacity(size * size);
    for r in 0..size {
        for c in 0..size {
            m.push(d[top + r - c].clone());
        }
    }
    Ok(symbolic_det(&m, size))
}

/// `v(f) = f'^2 - f'' f` in the ring.
pub fn symbolic_v(f: &TrigPoly) -> TrigPoly {
    let d = f.derivatives(2);
    &(&d[1] * &d[1]) - &(&d[2] * &d[0])
}

/// `w(f)` in the ring.
pub fn symbolic_w(f: &TrigPoly) -> TrigPoly {
    let d = f.derivatives(4);
    let m = [
        d[2].clone(),
        d[1].clone(),
        d[0].clone(),
        d[3].clone(),
        d[2].clone(),
        d[1].clone(),
        d[4].clone(),
        d[3].clone(),
        d[2].clone(),
    ];
    symbolic_det(&m, 3)
}
