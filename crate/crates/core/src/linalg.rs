//! Small dense helpers shared by the solvers.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

/// Solves `a · x = b` by Gaussian elimination with partial pivoting.
///
/// On a (numerically) singular matrix returns the column whose pivot vanished.
pub fn solve_dense(mut a: DMatrix<f64>, mut b: DVector<f64>) -> Result<DVector<f64>, usize> {
    let n = a.nrows();
    assert_eq!(n, a.ncols());
    assert_eq!(n, b.len());
    let scale = a.iter().fold(0.0_f64, |m, v| m.max(v.abs())).max(1.0);
    let tiny = scale * 1e-13;
    for k in 0..n {
        let (mut p, mut best) = (k, a[(k, k)].abs());
        for r in (k + 1)..n {
            let v = a[(r, k)].abs();
            if v > best {
                best = v;
                p = r;
            }
        }
        if !(best > tiny) {
            return Err(k);
        }
        if p != k {
            a.swap_rows(p, k);
            b.swap_rows(p, k);
        }
        let piv = a[(k, k)];
        for r in (k + 1)..n {
            let f = a[(r, k)] / piv;
            if f != 0.0 {
                for c in k..n {
                    a[(r, c)] -= f * a[(k, c)];
                }
                b[r] -= f * b[k];
            }
        }
    }
    for k in (0..n).rev() {
        let mut s = b[k];
        for c in (k + 1)..n {
            s -= a[(k, c)] * b[c];
        }
        b[k] = s / a[(k, k)];
    }
    Ok(b)
}

pub fn inverse_complex(m: &DMatrix<Complex64>) -> Option<DMatrix<Complex64>> {
    if m.nrows() == 0 {
        return Some(m.clone());
    }
    m.clone().try_inverse()
}

pub fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}
