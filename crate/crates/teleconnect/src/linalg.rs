//! Minimal dense linear algebra for the small systems that appear in this
//! crate: least-squares designs of a handful of columns, Lyapunov solves
//! for Kalman initialization, and Cholesky factors of small Toeplitz
//! covariance matrices.
//!
//! Row-major `Vec<f64>` storage throughout; everything here is exact-order
//! deterministic.

use crate::{Error, Result};

/// Dense row-major matrix.
#[derive(Debug, Clone)]
pub(crate) struct Mat {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }
}

/// Ordinary least squares via Householder QR.
///
/// Returns the coefficient vector and the standard errors computed from
/// sigma2_hat = RSS / (rows - cols). Rejects rank-deficient designs.
pub(crate) fn qr_least_squares(x: &Mat, y: &[f64]) -> Result<(Vec<f64>, Vec<f64>, f64)> {
    let n = x.rows;
    let p = x.cols;
    if y.len() != n {
        return Err(Error::domain("design and response length mismatch"));
    }
    if n <= p {
        return Err(Error::domain("least squares needs more rows than columns"));
    }

    // Householder QR, transforming y alongside.
    let mut a = x.clone();
    let mut b = y.to_vec();
    for k in 0..p {
        let mut norm = 0.0;
        for i in k..n {
            norm += a.get(i, k) * a.get(i, k);
        }
        norm = norm.sqrt();
        if norm < 1e-12 {
            return Err(Error::numeric("rank-deficient design matrix"));
        }
        let alpha = if a.get(k, k) > 0.0 { -norm } else { norm };
        let mut v = vec![0.0; n - k];
        v[0] = a.get(k, k) - alpha;
        for i in k + 1..n {
            v[i - k] = a.get(i, k);
        }
        let vtv: f64 = v.iter().map(|e| e * e).sum();
        if vtv < 1e-300 {
            a.set(k, k, alpha);
            continue;
        }
        // Apply H = I - 2 v v^T / v^T v to the remaining columns and to b.
        for j in k..p {
            let mut dot = 0.0;
            for i in k..n {
                dot += v[i - k] * a.get(i, j);
            }
            let scale = 2.0 * dot / vtv;
            for i in k..n {
                let val = a.get(i, j) - scale * v[i - k];
                a.set(i, j, val);
            }
        }
        let mut dot = 0.0;
        for i in k..n {
            dot += v[i - k] * b[i];
        }
        let scale = 2.0 * dot / vtv;
        for i in k..n {
            b[i] -= scale * v[i - k];
        }
        a.set(k, k, alpha);
    }

    // Back substitution on the upper-triangular R.
    let mut coef = vec![0.0; p];
    for i in (0..p).rev() {
        let mut sum = b[i];
        for j in i + 1..p {
            sum -= a.get(i, j) * coef[j];
        }
        let diag = a.get(i, i);
        if diag.abs() < 1e-12 {
            return Err(Error::numeric("rank-deficient design matrix"));
        }
        coef[i] = sum / diag;
    }

    // RSS from the transformed tail of b.
    let rss: f64 = b[p..].iter().map(|e| e * e).sum();
    let sigma2 = rss / (n - p) as f64;

    // se_j = sigma * sqrt((X'X)^{-1}_{jj}) with (X'X)^{-1}_{jj} = ||R^{-T} e_j||^2,
    // obtained by forward substitution on R^T w = e_j.
    let mut se = vec![0.0; p];
    for j in 0..p {
        let mut w = vec![0.0; p];
        for i in 0..p {
            let mut sum = if i == j { 1.0 } else { 0.0 };
            for k in 0..i {
                sum -= a.get(k, i) * w[k];
            }
            w[i] = sum / a.get(i, i);
        }
        let norm2: f64 = w[j..].iter().map(|e| e * e).sum();
        se[j] = (sigma2 * norm2).sqrt();
    }

    Ok((coef, se, sigma2))
}

/// Solves A x = b by LU decomposition with partial pivoting.
///
/// Returns None when the matrix is singular or badly conditioned.
pub(crate) fn lu_solve(a: &Mat, b: &[f64]) -> Option<Vec<f64>> {
    let n = a.rows;
    debug_assert_eq!(n, a.cols);
    debug_assert_eq!(n, b.len());

    let mut lu = a.clone();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut max_pivot = 0.0_f64;
    let mut min_pivot = f64::MAX;

    for col in 0..n {
        let mut max_val = lu.get(perm[col], col).abs();
        let mut max_row = col;
        for row in col + 1..n {
            let val = lu.get(perm[row], col).abs();
            if val > max_val {
                max_val = val;
                max_row = row;
            }
        }
        if max_val < 1e-14 {
            return None;
        }
        max_pivot = max_pivot.max(max_val);
        min_pivot = min_pivot.min(max_val);
        perm.swap(col, max_row);

        let pivot = lu.get(perm[col], col);
        for row in col + 1..n {
            let factor = lu.get(perm[row], col) / pivot;
            lu.set(perm[row], col, factor);
            for k in col + 1..n {
                let val = lu.get(perm[row], k) - factor * lu.get(perm[col], k);
                lu.set(perm[row], k, val);
            }
        }
    }
    if min_pivot <= 0.0 || max_pivot / min_pivot > 1e13 {
        return None;
    }

    let mut y = vec![0.0; n];
    for i in 0..n {
        let mut sum = b[perm[i]];
        for j in 0..i {
            sum -= lu.get(perm[i], j) * y[j];
        }
        y[i] = sum;
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut sum = y[i];
        for j in i + 1..n {
            sum -= lu.get(perm[i], j) * x[j];
        }
        x[i] = sum / lu.get(perm[i], i);
    }
    Some(x)
}

/// Cholesky factorization of a symmetric positive-definite matrix.
///
/// Returns the lower factor L with A = L L^T, or None if not PD.
#[allow(dead_code)] // used by test oracles
pub(crate) fn cholesky(a: &Mat) -> Option<Mat> {
    let n = a.rows;
    let mut l = Mat::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let mut sum = a.get(i, j);
            for k in 0..j {
                sum -= l.get(i, k) * l.get(j, k);
            }
            if i == j {
                if sum <= 0.0 {
                    return None;
                }
                l.set(i, j, sum.sqrt());
            } else {
                l.set(i, j, sum / l.get(j, j));
            }
        }
    }
    Some(l)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn qr_recovers_exact_coefficients() {
        // y = 2 + 3 x with no noise
        let mut x = Mat::zeros(5, 2);
        let mut y = vec![0.0; 5];
        for i in 0..5 {
            x.set(i, 0, 1.0);
            x.set(i, 1, i as f64);
            y[i] = 2.0 + 3.0 * i as f64;
        }
        let (coef, _, sigma2) = qr_least_squares(&x, &y).unwrap();
        assert_abs_diff_eq!(coef[0], 2.0, epsilon = 1e-10);
        assert_abs_diff_eq!(coef[1], 3.0, epsilon = 1e-10);
        assert!(sigma2 < 1e-18);
    }

    #[test]
    fn qr_standard_errors_match_normal_equations() {
        // Small problem with known (X'X)^{-1}: X = [1 0; 1 1; 1 2; 1 3]
        let mut x = Mat::zeros(4, 2);
        let y = vec![1.0, 2.0, 2.0, 4.0];
        for i in 0..4 {
            x.set(i, 0, 1.0);
            x.set(i, 1, i as f64);
        }
        let (coef, se, sigma2) = qr_least_squares(&x, &y).unwrap();
        // Normal equations by hand: X'X = [[4,6],[6,14]], det = 20
        // (X'X)^{-1} = [[0.7,-0.3],[-0.3,0.2]]
        let xtx_inv = [[0.7, -0.3], [-0.3, 0.2]];
        // beta = (X'X)^{-1} X'y, X'y = [9, 18]
        let beta0 = xtx_inv[0][0] * 9.0 + xtx_inv[0][1] * 18.0;
        let beta1 = xtx_inv[1][0] * 9.0 + xtx_inv[1][1] * 18.0;
        assert_abs_diff_eq!(coef[0], beta0, epsilon = 1e-10);
        assert_abs_diff_eq!(coef[1], beta1, epsilon = 1e-10);
        assert_abs_diff_eq!(se[0], (sigma2 * 0.7).sqrt(), epsilon = 1e-10);
        assert_abs_diff_eq!(se[1], (sigma2 * 0.2).sqrt(), epsilon = 1e-10);
    }

    #[test]
    fn qr_rejects_collinear_design() {
        let mut x = Mat::zeros(4, 2);
        for i in 0..4 {
            x.set(i, 0, 1.0);
            x.set(i, 1, 2.0); // second column is a multiple of the first
        }
        let y = vec![1.0, 2.0, 3.0, 4.0];
        assert!(qr_least_squares(&x, &y).is_err());
    }

    #[test]
    fn lu_identity() {
        let mut a = Mat::zeros(3, 3);
        for i in 0..3 {
            a.set(i, i, 1.0);
        }
        let x = lu_solve(&a, &[1.0, 2.0, 3.0]).unwrap();
        assert_abs_diff_eq!(x[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(x[2], 3.0, epsilon = 1e-12);
    }

    #[test]
    fn lu_known_system() {
        let mut a = Mat::zeros(2, 2);
        a.set(0, 0, 2.0);
        a.set(0, 1, 1.0);
        a.set(1, 0, 1.0);
        a.set(1, 1, 3.0);
        let x = lu_solve(&a, &[5.0, 10.0]).unwrap();
        assert_abs_diff_eq!(x[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(x[1], 3.0, epsilon = 1e-12);
    }

    #[test]
    fn lu_singular_returns_none() {
        let mut a = Mat::zeros(2, 2);
        a.set(0, 0, 1.0);
        a.set(0, 1, 2.0);
        a.set(1, 0, 2.0);
        a.set(1, 1, 4.0);
        assert!(lu_solve(&a, &[1.0, 2.0]).is_none());
    }

    #[test]
    fn cholesky_roundtrip() {
        let mut a = Mat::zeros(3, 3);
        let vals = [[4.0, 2.0, 0.6], [2.0, 5.0, 1.5], [0.6, 1.5, 2.0]];
        for i in 0..3 {
            for j in 0..3 {
                a.set(i, j, vals[i][j]);
            }
        }
        let l = cholesky(&a).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let mut sum = 0.0;
                for k in 0..3 {
                    sum += l.get(i, k) * l.get(j, k);
                }
                assert_abs_diff_eq!(sum, vals[i][j], epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let mut a = Mat::zeros(2, 2);
        a.set(0, 0, 1.0);
        a.set(0, 1, 2.0);
        a.set(1, 0, 2.0);
        a.set(1, 1, 1.0);
        assert!(cholesky(&a).is_none());
    }
}
