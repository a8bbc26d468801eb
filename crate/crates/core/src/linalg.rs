//! Small dense symmetric solvers.
//!
//! Everything the fitters need is a Cholesky factorization of a p x p
//! Fisher-information matrix with p on the order of tens, so a hand-rolled
//! factorization beats pulling in a LAPACK backend.

use ndarray::{Array1, Array2};

/// Lower-triangular Cholesky factor of a symmetric positive-definite matrix.
/// Returns `None` when a pivot drops to (or below) zero, i.e. the matrix is
/// numerically singular.
pub fn cholesky(a: &Array2<f64>) -> Option<Array2<f64>> {
    let p = a.nrows();
    debug_assert_eq!(p, a.ncols());
    let mut l = Array2::<f64>::zeros((p, p));
    for j in 0..p {
        let mut d = a[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if !(d > 0.0) || !d.is_finite() {
            return None;
        }
        let dj = d.sqrt();
        l[(j, j)] = dj;
        for i in (j + 1)..p {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / dj;
        }
    }
    Some(l)
}

/// Solves `L L^T x = b` given the Cholesky factor `L`.
pub fn chol_solve(l: &Array2<f64>, b: &Array1<f64>) -> Array1<f64> {
    let p = l.nrows();
    let mut x = b.clone();
    // forward: L y = b
    for i in 0..p {
        let mut s = x[i];
        for k in 0..i {
            s -= l[(i, k)] * x[k];
        }
        x[i] = s / l[(i, i)];
    }
    // backward: L^T x = y
    for i in (0..p).rev() {
        let mut s = x[i];
        for k in (i + 1)..p {
            s -= l[(k, i)] * x[k];
        }
        x[i] = s / l[(i, i)];
    }
    x
}

/// Inverse of `L L^T` from its Cholesky factor.
pub fn chol_inverse(l: &Array2<f64>) -> Array2<f64> {
    let p = l.nrows();
    let mut inv = Array2::<f64>::zeros((p, p));
    let mut e = Array1::<f64>::zeros(p);
    for j in 0..p {
        e.fill(0.0);
        e[j] = 1.0;
        let col = chol_solve(l, &e);
        for i in 0..p {
            inv[(i, j)] = col[i];
        }
    }
    inv
}

/// `ln det(L L^T)` from the Cholesky factor.
pub fn chol_log_det(l: &Array2<f64>) -> f64 {
    2.0 * l.diag().iter().map(|d| d.ln()).sum::<f64>()
}

/// Solves the SPD system `a x = b`, or `None` if `a` is singular.
pub fn solve_spd(a: &Array2<f64>, b: &Array1<f64>) -> Option<Array1<f64>> {
    cholesky(a).map(|l| chol_solve(&l, b))
}
