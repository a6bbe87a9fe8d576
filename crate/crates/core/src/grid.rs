//! Sample grids for scans and identity checks.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// A non-positive lower endpoint is replaced by this value.
pub const EPSILON_EXCLUSION: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Spacing {
    Linear,
    Log,
}

/// `points` samples on `[lo, hi]`, both endpoints included.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GridSpec {
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
    pub spacing: Spacing,
}

impl GridSpec {
    pub fn new(lo: f64, hi: f64, points: usize, spacing: Spacing) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite()) {
            return Err(Error::usage(format!("grid endpoints must be finite: {lo}:{hi}")));
        }
        let lo = if lo <= 0.0 { EPSILON_EXCLUSION } else { lo };
        if points == 0 {
            return Err(Error::usage("a grid needs at least one point"));
        }
        if points == 1 && lo != hi || points > 1 && !(lo < hi) {
            return Err(Error::usage(format!(
                "grid {lo}:{hi} with {points} points is empty or reversed"
            )));
        }
        Ok(GridSpec {
            lo,
            hi,
            points,
            spacing,
        })
    }

    /// A single sample at `x`.
    pub fn point(x: f64) -> Result<Self> {
        GridSpec::new(x, x, 1, Spacing::Linear)
    }

    pub fn linear(lo: f64, hi: f64, points: usize) -> Result<Self> {
        GridSpec::new(lo, hi, points, Spacing::Linear)
    }

    pub fn log(lo: f64, hi: f64, points: usize) -> Result<Self> {
        GridSpec::new(lo, hi, points, Spacing::Log)
    }

    pub fn nodes(&self) -> Vec<f64> {
        if self.points == 1 {
            return alloc::vec![self.lo];
        }
        let last = (self.points - 1) as f64;
        let mut out: Vec<f64> = (0..self.points)
            .map(|i| {
                let t = i as f64 / last;
                match self.spacing {
                    Spacing::Linear => self.lo + (self.hi - self.lo) * t,
                    Spacing::Log => {
                        libm::exp(libm::log(self.lo) + (libm::log(self.hi) - libm::log(self.lo)) * t)
                    }
                }
            })
            .collect();
        out[self.points - 1] = self.hi;
        out[0] = self.lo;
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn endpoints_are_inclusive() {
        let g = GridSpec::log(1e-2, 30.0, 500).unwrap();
        let n = g.nodes();
        assert_eq!(n.len(), 500);
        assert_eq!(n[0], 1e-2);
        assert_eq!(n[499], 30.0);
        assert!(n.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn zero_lower_endpoint_is_excluded() {
        let g = GridSpec::linear(0.0, 1.0, 11).unwrap();
        assert_eq!(g.nodes()[0], EPSILON_EXCLUSION);
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(GridSpec::linear(2.0, 1.0, 10).is_err());
        assert!(GridSpec::linear(1.0, 2.0, 0).is_err());
        assert!(GridSpec::linear(1.0, f64::INFINITY, 3).is_err());
    }
}
