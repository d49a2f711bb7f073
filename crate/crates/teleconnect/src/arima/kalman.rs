//! ARMA state-space form and the Kalman filter used for exact Gaussian
//! likelihood evaluation by prediction-error decomposition.
//!
//! The state dimension is r = max(p, q+1); the transition matrix is the
//! companion form with the AR coefficients in the first column, and the
//! noise loading vector is (1, theta_1, ..., theta_q, 0, ...). The initial
//! state covariance is the exact stationary solution of the discrete
//! Lyapunov equation P = T P T' + R R'.

use crate::linalg::{lu_solve, Mat};
use crate::{Error, Result};

const F_MIN: f64 = 1e-12;

pub(crate) struct StateSpace {
    r: usize,
    t: Mat,
    rrt: Mat,
}

impl StateSpace {
    pub fn new(phi: &[f64], theta: &[f64]) -> Self {
        let p = phi.len();
        let q = theta.len();
        let r = p.max(q + 1).max(1);
        let mut t = Mat::zeros(r, r);
        for (i, &ph) in phi.iter().enumerate() {
            t.set(i, 0, ph);
        }
        for i in 0..r.saturating_sub(1) {
            t.set(i, i + 1, 1.0);
        }
        let mut rv = vec![0.0; r];
        rv[0] = 1.0;
        for (j, &th) in theta.iter().enumerate() {
            rv[j + 1] = th;
        }
        let mut rrt = Mat::zeros(r, r);
        for i in 0..r {
            for j in 0..r {
                rrt.set(i, j, rv[i] * rv[j]);
            }
        }
        StateSpace { r, t, rrt }
    }

    /// Stationary initial covariance from (I - T kron T) vec(P) = vec(RR').
    fn initial_covariance(&self) -> Result<Mat> {
        let r = self.r;
        let r2 = r * r;
        let mut lhs = Mat::zeros(r2, r2);
        for i in 0..r2 {
            lhs.set(i, i, 1.0);
        }
        for i in 0..r {
            for j in 0..r {
                let tij = self.t.get(i, j);
                for k in 0..r {
                    for l in 0..r {
                        let cur = lhs.get(i * r + k, j * r + l);
                        lhs.set(i * r + k, j * r + l, cur - tij * self.t.get(k, l));
                    }
                }
            }
        }
        let mut q_vec = vec![0.0; r2];
        for i in 0..r {
            for j in 0..r {
                q_vec[i * r + j] = self.rrt.get(i, j);
            }
        }
        let sol = lu_solve(&lhs, &q_vec)
            .ok_or_else(|| Error::numeric("stationary covariance solve failed (near unit root)"))?;
        let mut p = Mat::zeros(r, r);
        for i in 0..r {
            for j in 0..r {
                p.set(i, j, sol[i * r + j]);
            }
        }
        Ok(p)
    }
}

/// One full filter pass with unit innovation variance.
///
/// Returns (sum of ln f_t, sum of v_t^2 / f_t, innovations v, ratios f).
pub(crate) fn filter(
    ss: &StateSpace,
    data: &[f64],
) -> Result<(f64, f64, Vec<f64>, Vec<f64>)> {
    let r = ss.r;
    let n = data.len();
    let mut x = vec![0.0; r];
    let mut p = ss.initial_covariance()?;

    let mut sum_ln_f = 0.0;
    let mut sum_v2_f = 0.0;
    let mut innovations = Vec::with_capacity(n);
    let mut ratios = Vec::with_capacity(n);
    let mut x_pred = vec![0.0; r];
    let mut p_pred = Mat::zeros(r, r);
    let mut tmp = Mat::zeros(r, r);
    let mut gain = vec![0.0; r];

    for &y in data {
        // x_pred = T x
        for i in 0..r {
            let mut acc = 0.0;
            for k in 0..r {
                acc += ss.t.get(i, k) * x[k];
            }
            x_pred[i] = acc;
        }
        // P_pred = T P T' + RR'
        for i in 0..r {
            for j in 0..r {
                let mut acc = 0.0;
                for k in 0..r {
                    acc += ss.t.get(i, k) * p.get(k, j);
                }
                tmp.set(i, j, acc);
            }
        }
        for i in 0..r {
            for j in 0..r {
                let mut acc = ss.rrt.get(i, j);
                for k in 0..r {
                    acc += tmp.get(i, k) * ss.t.get(j, k);
                }
                p_pred.set(i, j, acc);
            }
        }

        let f = p_pred.get(0, 0).max(F_MIN);
        let v = y - x_pred[0];
        if !f.is_finite() || !v.is_finite() {
            return Err(Error::numeric("non-finite Kalman intermediate"));
        }
        sum_ln_f += f.ln();
        sum_v2_f += v * v / f;
        innovations.push(v);
        ratios.push(f);

        for i in 0..r {
            gain[i] = p_pred.get(i, 0) / f;
        }
        for i in 0..r {
            x[i] = x_pred[i] + gain[i] * v;
        }
        for i in 0..r {
            for j in 0..r {
                p.set(i, j, p_pred.get(i, j) - gain[i] * p_pred.get(0, j));
            }
        }
    }
    Ok((sum_ln_f, sum_v2_f, innovations, ratios))
}

/// Concentrated log-likelihood with sigma2 profiled out analytically.
///
/// Returns (loglik, sigma2_hat) where sigma2_hat is the ML (1/n) estimate.
pub(crate) fn concentrated_loglik(ss: &StateSpace, data: &[f64]) -> Result<(f64, f64)> {
    let n = data.len() as f64;
    let (sum_ln_f, sum_v2_f, _, _) = filter(ss, data)?;
    let sigma2 = sum_v2_f / n;
    if !(sigma2 > 0.0) || !sigma2.is_finite() {
        return Err(Error::numeric("degenerate innovation variance"));
    }
    let ll = -0.5 * n * (2.0 * std::f64::consts::PI).ln()
        - 0.5 * n * sigma2.ln()
        - 0.5 * n
        - 0.5 * sum_ln_f;
    Ok((ll, sigma2))
}

/// Exact log-likelihood at a fixed sigma2.
pub(crate) fn loglik_at(ss: &StateSpace, data: &[f64], sigma2: f64) -> Result<f64> {
    let n = data.len() as f64;
    let (sum_ln_f, sum_v2_f, _, _) = filter(ss, data)?;
    Ok(
        -0.5 * n * (2.0 * std::f64::consts::PI * sigma2).ln() - 0.5 * sum_ln_f
            - 0.5 * sum_v2_f / sigma2,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn ar1_initial_covariance_analytic() {
        // For AR(1): P0 = 1 / (1 - phi^2)
        let ss = StateSpace::new(&[0.5], &[]);
        let p0 = ss.initial_covariance().unwrap();
        assert_abs_diff_eq!(p0.get(0, 0), 1.0 / 0.75, epsilon = 1e-12);
    }

    #[test]
    fn initial_covariance_satisfies_lyapunov() {
        let ss = StateSpace::new(&[0.5, -0.3], &[0.4]);
        let p = ss.initial_covariance().unwrap();
        let r = ss.r;
        for i in 0..r {
            for j in 0..r {
                let mut acc = ss.rrt.get(i, j);
                for k in 0..r {
                    for l in 0..r {
                        acc += ss.t.get(i, k) * p.get(k, l) * ss.t.get(j, l);
                    }
                }
                assert_abs_diff_eq!(p.get(i, j), acc, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn white_noise_loglik_is_standard_normal_density() {
        let ss = StateSpace::new(&[], &[]);
        let ll = loglik_at(&ss, &[0.0, 0.0], 1.0).unwrap();
        assert_abs_diff_eq!(ll, -(2.0 * std::f64::consts::PI).ln(), epsilon = 1e-12);
    }

    #[test]
    fn concentrated_matches_fixed_at_mle() {
        let ss = StateSpace::new(&[0.3], &[0.2]);
        let data = [0.5, -0.3, 1.2, 0.1, -0.8, 0.4, 0.7, -0.2, 0.9, -0.1];
        let (conc, sigma2) = concentrated_loglik(&ss, &data).unwrap();
        let fixed = loglik_at(&ss, &data, sigma2).unwrap();
        assert_abs_diff_eq!(conc, fixed, epsilon = 1e-10);
    }

    #[test]
    fn companion_layout() {
        let ss = StateSpace::new(&[0.5, -0.3], &[0.4, 0.2]);
        assert_eq!(ss.r, 3);
        assert_abs_diff_eq!(ss.t.get(0, 0), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(ss.t.get(1, 0), -0.3, epsilon = 1e-15);
        assert_abs_diff_eq!(ss.t.get(0, 1), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(ss.t.get(1, 2), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(ss.rrt.get(1, 2), 0.4 * 0.2, epsilon = 1e-15);
    }
}
