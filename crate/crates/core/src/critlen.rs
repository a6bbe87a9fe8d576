//! Critical length of `P_n (.) C_1`: the least positive zero over the
//! admissible Wronskian minors, compared with `j_{n+1/2,1}`.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::bessel::{bessel_zero, BesselOrder};
use crate::determinants::{symbolic_minor, MinorEvaluator, SYMBOLIC_MAX_N};
use crate::error::{Error, Result};
use crate::eval::TrigEval;

/// Left end of every scan.
pub const SCAN_START: f64 = 1e-3;
/// Samples whose magnitude is below this fraction of their scale are noise.
pub const NOISE_FLOOR: f64 = 1e-12;
/// Largest `|gap|` still counted as agreement with the conjecture.
pub const CONSISTENCY_GAP: f64 = 1e-6;
pub const DEFAULT_TOL: f64 = 1e-12;
/// `conjecture_scan` stays within the symbolic minor budget.
pub const SCAN_MAX_N: usize = SYMBOLIC_MAX_N;

const STEPS_PER_REFERENCE: f64 = 512.0;
const HALVING_ROUNDS: usize = 3;
const BISECTION_CAP: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum ScanStatus {
    Zero,
    NoZeroWithinCap,
    Indeterminate,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct PerJ {
    pub j: usize,
    pub first_zero: Option<f64>,
    pub search_cap: f64,
    pub status: ScanStatus,
    /// Where the scan lost resolution, for indeterminate entries.
    pub indeterminate_at: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct CritLenReport {
    pub n: usize,
    pub per_j: Vec<PerJ>,
    pub estimate: f64,
    pub reference: f64,
    pub gap: f64,
    pub conjecture_consistent: bool,
    /// Whether `n` is one of the cases with a proof (`n <= 2`).
    pub proved_case: bool,
    pub note: Option<String>,
}

/// The admissible `j`: `(2n+1)/2 < j <= 2n+1`.
pub fn admissible_j(n: usize) -> core::ops::RangeInclusive<usize> {
    n + 1..=2 * n + 1
}

/// `j_{n+1/2,1}`.
pub fn reference_length(n: usize) -> Result<f64> {
    Ok(bessel_zero(BesselOrder::half_integer(n), 1, 1e-14)?.value)
}

enum Minor {
    Exact(TrigEval),
    Numeric(MinorEvaluator),
}

impl Minor {
    fn new(n: usize, j: usize) -> Result<Self> {
        if n <= SYMBOLIC_MAX_N {
            Ok(Minor::Exact(symbolic_minor(n, j)?.compile()))
        } else {
            Ok(Minor::Numeric(MinorEvaluator::new(n, j)?))
        }
    }

    /// Value, or `None` when it cannot be told apart from zero.
    fn sample(&self, x: f64) -> Result<Option<f64>> {
        let (v, noisy) = self.raw(x)?;
        Ok(if noisy { None } else { Some(v) })
    }

    /// Value and whether it is below the noise floor.
    fn raw(&self, x: f64) -> Result<(f64, bool)> {
        let (v, noise) = match self {
            Minor::Exact(e) => {
                let d = e.eval_detail(x)?;
                let v = d.value.to_f64();
                (v, d.error.max(NOISE_FLOOR * d.magnitude))
            }
            Minor::Numeric(m) => {
                let (v, scale) = m.eval_scaled(x)?;
                (v, NOISE_FLOOR * scale)
            }
        };
        if !v.is_finite() {
            return Err(Error::numerical(format!("minor is not finite at x = {x}")));
        }
        Ok((v, v.abs() <= noise))
    }
}

fn first_zero(minor: &Minor, cap: f64, step: f64, tol: f64) -> Result<(ScanStatus, Option<f64>, Option<f64>)> {
    let mut prev: Option<(f64, f64)> = None;
    let mut noisy_since: Option<f64> = None;
    let mut i = 0usize;
    loop {
        let x = (SCAN_START + step * i as f64).min(cap);
        match minor.sample(x)? {
            None => {
                noisy_since.get_or_insert(x);
            }
            Some(v) => {
                if let Some((a, va)) = prev {
                    if (va < 0.0) != (v < 0.0) {
                        let (lo, hi) = narrow(minor, a, x, va)?;
                        return Ok((ScanStatus::Zero, Some(bisect(minor, lo, hi, va, tol)?), None));
                    }
                }
                if let Some(at) = noisy_since {
                    // lost resolution without a sign change
                    if prev.is_some() {
                        return Ok((ScanStatus::Indeterminate, None, Some(at)));
                    }
                    noisy_since = None;
                }
                prev = Some((x, v));
            }
        }
        if x >= cap {
            break;
        }
        i += 1;
    }
    if let Some(at) = noisy_since {
        return Ok((ScanStatus::Indeterminate, None, Some(at)));
    }
    Ok((ScanStatus::NoZeroWithinCap, None, None))
}

/// Halves the step inside `[a, b]` and keeps the leftmost sign change.
fn narrow(minor: &Minor, mut a: f64, mut b: f64, va: f64) -> Result<(f64, f64)> {
    for round in 1..=HALVING_ROUNDS {
        let parts = 1usize << round;
        let h = (b - a) / parts as f64;
        let mut left = a;
        for k in 1..=parts {
            let x = if k == parts { b } else { a + h * k as f64 };
            if let Some(v) = minor.sample(x)? {
                if (v < 0.0) != (va < 0.0) {
                    a = left;
                    b = x;
                    break;
                }
                left = x;
            }
        }
    }
    Ok((a, b))
}

fn bisect(minor: &Minor, mut a: f64, mut b: f64, va: f64, tol: f64) -> Result<f64> {
    for _ in 0..BISECTION_CAP {
        if b - a <= tol * b.max(1.0) {
            break;
        }
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        // below the noise floor the raw sign is still the best information
        match minor.raw(m)?.0 {
            v if v == 0.0 => return Ok(m),
            v if (v < 0.0) == (va < 0.0) => a = m,
            _ => b = m,
        }
    }
    Ok(0.5 * (a + b))
}

/// Scans every admissible minor of `P_n (.) C_1` on `(SCAN_START, cap)`.
/// `cap` defaults to `1.5 j_{n+1/2,1}`.
pub fn estimate_critical_length(n: usize, cap: Option<f64>, tol: f64) -> Result<CritLenReport> {
    if !(tol > 0.0) {
        return Err(Error::usage("tolerance must be positive"));
    }
    let reference = reference_length(n)?;
    let cap = cap.unwrap_or(1.5 * reference);
    if !(cap > SCAN_START) || !cap.is_finite() {
        return Err(Error::usage(format!("search cap must exceed {SCAN_START}, got {cap}")));
    }
    let step = reference / STEPS_PER_REFERENCE;
    let mut per_j = Vec::new();
    for j in admissible_j(n) {
        let minor = Minor::new(n, j)?;
        let (status, first_zero, indeterminate_at) = first_zero(&minor, cap, step, tol)?;
        per_j.push(PerJ {
            j,
            first_zero,
            search_cap: cap,
            status,
            indeterminate_at,
        });
    }
    Ok(assemble(n, per_j, reference))
}

fn assemble(n: usize, per_j: Vec<PerJ>, reference: f64) -> CritLenReport {
    let estimate = per_j
        .iter()
        .filter_map(|p| p.first_zero)
        .fold(f64::INFINITY, f64::min);
    let gap = estimate - reference;
    let unresolved: Vec<usize> = per_j
        .iter()
        .filter(|p| p.status == ScanStatus::Indeterminate && p.indeterminate_at.is_some_and(|x| x < estimate))
        .map(|p| p.j)
        .collect();
    let note = if unresolved.is_empty() {
        None
    } else {
        Some(format!("minors for j = {unresolved:?} lost resolution before the estimate"))
    };
    CritLenReport {
        n,
        per_j,
        estimate,
        reference,
        gap,
        conjecture_consistent: gap.abs() <= CONSISTENCY_GAP && unresolved.is_empty(),
        proved_case: n <= 2,
        note,
    }
}

/// Reports for `n = 0..=n_max` with default cap and tolerance.
pub fn conjecture_scan(n_max: usize) -> Result<Vec<CritLenReport>> {
    if n_max > SCAN_MAX_N {
        return Err(Error::usage(format!("conjecture_scan is limited to n_max <= {SCAN_MAX_N}")));
    }
    (0..=n_max).map(|n| estimate_critical_length(n, None, DEFAULT_TOL)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::PI;

    #[test]
    fn admissible_range() {
        assert_eq!(admissible_j(0).collect::<Vec<_>>(), [1]);
        assert_eq!(admissible_j(2).collect::<Vec<_>>(), [3, 4, 5]);
    }

    #[test]
    fn n_zero_is_pi() {
        let r = estimate_critical_length(0, None, 1e-13).unwrap();
        assert!((r.estimate - PI).abs() < 1e-10, "{}", r.estimate);
        assert!(r.conjecture_consistent);
    }

    #[test]
    fn n_one_matches_first_zero_of_f1() {
        let r = estimate_critical_length(1, None, 1e-13).unwrap();
        assert!((r.estimate - 4.4934094579).abs() < 1e-8);
        let j2 = r.per_j.iter().find(|p| p.j == 2).unwrap();
        assert_eq!(j2.status, ScanStatus::NoZeroWithinCap);
    }

    #[test]
    fn scan_up_to_two_is_consistent() {
        for r in conjecture_scan(2).unwrap() {
            assert!(r.conjecture_consistent, "{r:?}");
            assert!(r.estimate <= r.reference + 1e-8);
        }
    }

    #[test]
    fn rejects_large_scan() {
        assert!(matches!(conjecture_scan(7), Err(Error::Usage(_))));
    }

    #[test]
    fn custom_cap_below_reference_finds_nothing_for_n_one() {
        let r = estimate_critical_length(1, Some(3.0), 1e-12).unwrap();
        assert!(r.estimate.is_infinite());
        assert!(!r.conjecture_consistent);
    }

    #[test]
    fn numeric_path_agrees_with_exact_for_small_n() {
        let exact = Minor::new(2, 3).unwrap();
        let numeric = Minor::Numeric(MinorEvaluator::new(2, 3).unwrap());
        let cap = 1.5 * reference_length(2).unwrap();
        let step = reference_length(2).unwrap() / STEPS_PER_REFERENCE;
        let a = first_zero(&exact, cap, step, 1e-12).unwrap();
        let b = first_zero(&numeric, cap, step, 1e-12).unwrap();
        assert_eq!(a.0, b.0);
        if let (Some(x), Some(y)) = (a.1, b.1) {
            assert!((x - y).abs() < 1e-9);
        }
    }
}
