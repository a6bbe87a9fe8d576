//! Determinants of small dense matrices by LU with partial pivoting, in
//! double-double.

use alloc::vec::Vec;

use crate::dd::Dd;

/// A pivot smaller than this fraction of the largest entry ends the
/// elimination with determinant 0.
pub const PIVOT_FLOOR: f64 = 1e-300;

/// Determinant of the row-major `size x size` matrix `a`.
pub fn det(mut a: Vec<Dd>, size: usize) -> Dd {
    assert_eq!(a.len(), size * size, "matrix is not {size}x{size}");
    if size == 0 {
        return Dd::ONE;
    }
    let scale = a.iter().fold(0.0f64, |m, v| m.max(v.hi.abs()));
    if scale == 0.0 {
        return Dd::ZERO;
    }
    let mut det = Dd::ONE;
    for col in 0..size {
        let (piv, piv_abs) = (col..size)
            .map(|r| (r, a[r * size + col].hi.abs()))
            .fold((col, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
        if piv_abs / scale < PIVOT_FLOOR {
            return Dd::ZERO;
        }
        if piv != col {
            for c in 0..size {
                a.swap(piv * size + c, col * size + c);
            }
            det = -det;
        }
        let p = a[col * size + col];
        det *= p;
        for r in col + 1..size {
            let factor = a[r * size + col] / p;
            if factor.hi == 0.0 {
                continue;
            }
            for c in col + 1..size {
                let v = a[col * size + c];
                a[r * size + c] -= factor * v;
            }
        }
    }
    det
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[&[f64]]) -> (Vec<Dd>, usize) {
        let n = rows.len();
        (rows.iter().flat_map(|r| r.iter().map(|&v| Dd::new(v))).collect(), n)
    }

    #[test]
    fn small_known_determinants() {
        let (a, n) = m(&[&[2.0, 1.0], &[1.0, 3.0]]);
        assert_eq!(det(a, n).to_f64(), 5.0);
        let (a, n) = m(&[&[0.0, 1.0, 0.0], &[1.0, 0.0, 0.0], &[0.0, 0.0, 1.0]]);
        assert_eq!(det(a, n).to_f64(), -1.0);
        let (a, n) = m(&[&[1.0, 2.0], &[2.0, 4.0]]);
        assert_eq!(det(a, n).to_f64(), 0.0);
    }

    #[test]
    fn hilbert_matrix_in_double_double() {
        // det of the 5x5 Hilbert matrix is 1/266716800000
        let n = 5;
        let a: Vec<Dd> = (0..n * n)
            .map(|i| Dd::ONE / Dd::new((i / n + i % n + 1) as f64))
            .collect();
        let d = det(a, n).to_f64();
        let want = 1.0 / 266_716_800_000.0;
        assert!(((d - want) / want).abs() < 1e-15);
    }
}
