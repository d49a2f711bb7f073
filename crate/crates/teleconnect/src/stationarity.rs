//! Augmented Dickey-Fuller unit-root test with tabulated p-value
//! interpolation.
//!
//! The regression includes an intercept and a linear trend by default (a
//! constant-only variant is available); the statistic is the t-ratio of
//! the lagged-level coefficient and the p-value comes from bilinear
//! interpolation in the published trend-inclusive tau quantile table.

use serde::Serialize;

use crate::linalg::{qr_least_squares, Mat};
use crate::series::TimeSeries;
use crate::{Error, Result};

/// Deterministic regressors included in the test regression.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Regression {
    /// Intercept and linear trend (the default).
    Trend,
    /// Intercept only.
    Constant,
}

/// Whether the interpolated p-value hit a clamp bound of the table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Clamp {
    None,
    /// The actual p-value is smaller than the reported 0.01.
    Lower,
    /// The actual p-value is greater than the reported 0.99.
    Upper,
}

/// Result of the ADF test against the alternative of stationarity.
#[derive(Debug, Clone, Serialize)]
pub struct AdfResult {
    /// Dickey-Fuller tau statistic.
    pub statistic: f64,
    /// Number of lagged-difference terms in the regression.
    pub lag_order: usize,
    /// Interpolated p-value, clamped to [0.01, 0.99].
    pub p_value: f64,
    pub clamp: Clamp,
    pub regression: Regression,
    pub alternative: &'static str,
}

// Tau quantiles for the trend-inclusive Dickey-Fuller distribution at
// sample sizes {25, 50, 100, 250, 500, inf} and cumulative probabilities
// {0.01, 0.025, 0.05, 0.10, 0.90, 0.95, 0.975, 0.99}.
const TABLE_N: [f64; 6] = [25.0, 50.0, 100.0, 250.0, 500.0, 1e5];
const TABLE_P: [f64; 8] = [0.01, 0.025, 0.05, 0.10, 0.90, 0.95, 0.975, 0.99];
#[rustfmt::skip]
const TAU_TREND: [[f64; 6]; 8] = [
    [-4.38, -4.15, -4.04, -3.99, -3.98, -3.96],
    [-3.95, -3.80, -3.73, -3.69, -3.68, -3.66],
    [-3.60, -3.50, -3.45, -3.43, -3.42, -3.41],
    [-3.24, -3.18, -3.15, -3.13, -3.13, -3.12],
    [-1.14, -1.19, -1.22, -1.23, -1.24, -1.25],
    [-0.80, -0.87, -0.90, -0.92, -0.93, -0.94],
    [-0.50, -0.58, -0.62, -0.64, -0.65, -0.66],
    [-0.15, -0.24, -0.28, -0.31, -0.32, -0.33],
];
// Constant-only variant of the same table.
#[rustfmt::skip]
const TAU_CONST: [[f64; 6]; 8] = [
    [-3.75, -3.58, -3.51, -3.46, -3.44, -3.43],
    [-3.33, -3.22, -3.17, -3.14, -3.13, -3.12],
    [-3.00, -2.93, -2.89, -2.88, -2.87, -2.86],
    [-2.63, -2.60, -2.58, -2.57, -2.57, -2.57],
    [-0.37, -0.40, -0.42, -0.42, -0.43, -0.44],
    [ 0.00, -0.03, -0.05, -0.06, -0.07, -0.07],
    [ 0.34,  0.29,  0.26,  0.24,  0.24,  0.23],
    [ 0.72,  0.66,  0.63,  0.62,  0.61,  0.60],
];

/// Linear interpolation with clamping outside the grid.
fn interp_clamped(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    if x <= xs[0] {
        return ys[0];
    }
    if x >= xs[xs.len() - 1] {
        return ys[ys.len() - 1];
    }
    for i in 1..xs.len() {
        if x <= xs[i] {
            let t = (x - xs[i - 1]) / (xs[i] - xs[i - 1]);
            return ys[i - 1] + t * (ys[i] - ys[i - 1]);
        }
    }
    ys[ys.len() - 1]
}

fn p_value_from_table(stat: f64, n: usize, regression: Regression) -> (f64, Clamp) {
    let table = match regression {
        Regression::Trend => &TAU_TREND,
        Regression::Constant => &TAU_CONST,
    };
    // First interpolate each probability row to the sample size, then
    // interpolate the statistic across probabilities.
    let mut crit = [0.0; 8];
    for (i, row) in table.iter().enumerate() {
        crit[i] = interp_clamped(&TABLE_N, row, n as f64);
    }
    if stat <= crit[0] {
        return (TABLE_P[0], Clamp::Lower);
    }
    if stat >= crit[7] {
        return (TABLE_P[7], Clamp::Upper);
    }
    (interp_clamped(&crit, &TABLE_P, stat), Clamp::None)
}

/// Default number of lagged-difference terms: floor((N-1)^(1/3)).
pub fn default_lag_order(n: usize) -> usize {
    ((n as f64 - 1.0).powf(1.0 / 3.0)).trunc() as usize
}

/// Augmented Dickey-Fuller test with the trend-inclusive regression.
pub fn adf_test(s: &TimeSeries, lag_order: Option<usize>) -> Result<AdfResult> {
    adf_test_with(s, lag_order, Regression::Trend)
}

/// ADF test with an explicit choice of deterministic regressors.
pub fn adf_test_with(
    s: &TimeSeries,
    lag_order: Option<usize>,
    regression: Regression,
) -> Result<AdfResult> {
    let x = s.complete_values()?;
    let n = x.len();
    let lags = lag_order.unwrap_or_else(|| default_lag_order(n));
    if n < lags + 10 {
        return Err(Error::domain(format!(
            "series of length {n} too short for ADF with lag order {lags}"
        )));
    }

    // Differences y_i = x_{i+1} - x_i, i = 0..n-2.
    let dy: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
    let m = dy.len();
    // Rows t = lags..m-1: regress dy[t] on x[t] (lagged level), intercept,
    // trend index and dy[t-1..t-lags].
    let rows = m - lags;
    let det_cols = match regression {
        Regression::Trend => 2,
        Regression::Constant => 1,
    };
    let cols = 1 + det_cols + lags;
    let mut design = Mat::zeros(rows, cols);
    let mut resp = vec![0.0; rows];
    for r in 0..rows {
        let t = lags + r;
        resp[r] = dy[t];
        design.set(r, 0, x[t]); // level lagged one step behind dy[t]
        design.set(r, 1, 1.0);
        if det_cols == 2 {
            design.set(r, 2, (t + 1) as f64); // trend index
        }
        for j in 0..lags {
            design.set(r, 1 + det_cols + j, dy[t - 1 - j]);
        }
    }
    let (coef, se, _) = qr_least_squares(&design, &resp)?;
    let statistic = coef[0] / se[0];
    if !statistic.is_finite() {
        return Err(Error::numeric("non-finite ADF statistic"));
    }
    let (p_value, clamp) = p_value_from_table(statistic, n, regression);
    Ok(AdfResult {
        statistic,
        lag_order: lags,
        p_value,
        clamp,
        regression,
        alternative: "stationary",
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::Period;
    use approx::assert_abs_diff_eq;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn ts(values: Vec<f64>) -> TimeSeries {
        TimeSeries::new(1900, Period::Annual, values, "x").unwrap()
    }

    #[test]
    fn default_lag_matches_cube_root_rule() {
        assert_eq!(default_lag_order(301), 6);
        assert_eq!(default_lag_order(74), 4);
        assert_eq!(default_lag_order(170), 5);
    }

    #[test]
    fn random_walk_fails_to_reject() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let mut y = vec![0.0_f64];
        for _ in 0..499 {
            let e: f64 = rng.sample(StandardNormal);
            y.push(y.last().unwrap() + e);
        }
        let res = adf_test(&ts(y), None).unwrap();
        assert!(res.p_value > 0.10, "p = {}", res.p_value);
    }

    #[test]
    fn stationary_ar1_rejects() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut y = vec![0.0_f64];
        for _ in 0..499 {
            let e: f64 = rng.sample(StandardNormal);
            y.push(0.3 * y.last().unwrap() + e);
        }
        let res = adf_test(&ts(y), None).unwrap();
        assert_eq!(res.p_value, 0.01);
        assert_eq!(res.clamp, Clamp::Lower);
    }

    #[test]
    fn affine_invariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let mut y = vec![0.0_f64];
        for _ in 0..199 {
            let e: f64 = rng.sample(StandardNormal);
            y.push(0.8 * y.last().unwrap() + e);
        }
        let base = adf_test(&ts(y.clone()), Some(3)).unwrap();
        let shifted = adf_test(&ts(y.iter().map(|v| v + 100.0).collect()), Some(3)).unwrap();
        assert_abs_diff_eq!(base.statistic, shifted.statistic, epsilon = 1e-8);
        let scaled = adf_test(&ts(y.iter().map(|v| v * 3.5).collect()), Some(3)).unwrap();
        assert_abs_diff_eq!(base.statistic, scaled.statistic, epsilon = 1e-8);
    }

    #[test]
    fn p_value_monotone_in_statistic() {
        // Walking the statistic from deep rejection toward zero must not
        // decrease the interpolated p-value.
        let mut prev = 0.0;
        let mut t = -6.0;
        while t < 1.0 {
            let (p, _) = p_value_from_table(t, 200, Regression::Trend);
            assert!(p >= prev - 1e-12, "p not monotone at stat {t}");
            prev = p;
            t += 0.05;
        }
    }

    #[test]
    fn p_value_clamps_flagged() {
        let (p_lo, c_lo) = p_value_from_table(-9.0, 100, Regression::Trend);
        assert_eq!(p_lo, 0.01);
        assert_eq!(c_lo, Clamp::Lower);
        let (p_hi, c_hi) = p_value_from_table(5.0, 100, Regression::Trend);
        assert_eq!(p_hi, 0.99);
        assert_eq!(c_hi, Clamp::Upper);
    }

    #[test]
    fn too_short_series_errors() {
        assert!(adf_test(&ts(vec![1.0, 2.0, 3.0, 4.0]), Some(2)).is_err());
    }

    #[test]
    fn constant_only_variant_runs() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let y: Vec<f64> = (0..100).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let res = adf_test_with(&ts(y), Some(2), Regression::Constant).unwrap();
        assert_eq!(res.regression, Regression::Constant);
        assert!(res.p_value <= 0.05);
    }
}
