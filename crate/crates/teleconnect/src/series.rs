//! Core time-series type and elementary transforms.
//!
//! A [`TimeSeries`] is a regularly spaced sequence of observations with an
//! explicit missing-value mask. Transforms reject internal missing values;
//! removing them is the job of [`crate::ingest::align`].

use serde::Serialize;

use crate::{Error, Result};

/// Sampling resolution of a series.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Period {
    Annual,
    Seasonal,
    Monthly,
}

impl Period {
    /// Sub-periods per year: 1, 4 or 12.
    pub fn per_year(self) -> u32 {
        match self {
            Period::Annual => 1,
            Period::Seasonal => 4,
            Period::Monthly => 12,
        }
    }
}

/// Regularly spaced observations with a missing-value mask.
#[derive(Debug, Clone)]
pub struct TimeSeries {
    start_year: i32,
    /// 0-based sub-period index within the start year.
    start_sub: u32,
    period: Period,
    values: Vec<f64>,
    missing: Vec<bool>,
    units: String,
}

impl TimeSeries {
    /// Builds a series from complete (non-missing) values.
    pub fn new(start_year: i32, period: Period, values: Vec<f64>, units: &str) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::domain("time series must have length >= 1"));
        }
        let missing = vec![false; values.len()];
        Ok(TimeSeries {
            start_year,
            start_sub: 0,
            period,
            values,
            missing,
            units: units.to_string(),
        })
    }

    /// Builds a series where `None` marks a missing observation.
    pub fn with_missing(
        start_year: i32,
        period: Period,
        values: Vec<Option<f64>>,
        units: &str,
    ) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::domain("time series must have length >= 1"));
        }
        let missing: Vec<bool> = values.iter().map(|v| v.is_none()).collect();
        let values = values.into_iter().map(|v| v.unwrap_or(f64::NAN)).collect();
        Ok(TimeSeries {
            start_year,
            start_sub: 0,
            period,
            values,
            missing,
            units: units.to_string(),
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn period(&self) -> Period {
        self.period
    }

    pub fn start_year(&self) -> i32 {
        self.start_year
    }

    pub fn units(&self) -> &str {
        &self.units
    }

    pub fn has_missing(&self) -> bool {
        self.missing.iter().any(|&m| m)
    }

    /// Observation at index i, or None when masked missing.
    pub fn get(&self, i: usize) -> Option<f64> {
        if self.missing[i] {
            None
        } else {
            Some(self.values[i])
        }
    }

    /// Year (integer part) of observation i; sub-period resolution is
    /// carried by `time_label`.
    pub fn year_of(&self, i: usize) -> i32 {
        let per = self.period.per_year();
        let abs = self.start_sub + i as u32;
        self.start_year + (abs / per) as i32
    }

    /// Label such as "1952" (annual), "1952Q3" (seasonal) or "1952-07"
    /// (monthly) for observation i.
    pub fn time_label(&self, i: usize) -> String {
        let per = self.period.per_year();
        let abs = self.start_sub + i as u32;
        let year = self.start_year + (abs / per) as i32;
        let sub = abs % per;
        match self.period {
            Period::Annual => format!("{year}"),
            Period::Seasonal => format!("{year}Q{}", sub + 1),
            Period::Monthly => format!("{year}-{:02}", sub + 1),
        }
    }

    /// The values as a slice, erroring if any observation is missing.
    pub fn complete_values(&self) -> Result<&[f64]> {
        if self.has_missing() {
            return Err(Error::domain(
                "operation requires a series without missing values",
            ));
        }
        Ok(&self.values)
    }

    /// Raw values including NaN placeholders at missing slots.
    pub fn raw_values(&self) -> &[f64] {
        &self.values
    }

    /// Drops missing observations at both ends. Errors when missing values
    /// remain in the interior; alignment is the sanctioned way to remove
    /// those.
    pub fn trim_missing(&self) -> Result<TimeSeries> {
        let first = self.missing.iter().position(|&m| !m);
        let last = self.missing.iter().rposition(|&m| !m);
        let (first, last) = match (first, last) {
            (Some(f), Some(l)) => (f, l),
            _ => return Err(Error::domain("series is entirely missing")),
        };
        if self.missing[first..=last].iter().any(|&m| m) {
            return Err(Error::domain("interior missing values cannot be trimmed"));
        }
        let per = self.period.per_year();
        let abs = self.start_sub + first as u32;
        Ok(TimeSeries {
            start_year: self.start_year + (abs / per) as i32,
            start_sub: abs % per,
            period: self.period,
            values: self.values[first..=last].to_vec(),
            missing: vec![false; last - first + 1],
            units: self.units.clone(),
        })
    }

    /// Two-column CSV (time label, value); missing cells are left empty.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("time,value\n");
        for i in 0..self.len() {
            match self.get(i) {
                Some(v) => out.push_str(&format!("{},{}\n", self.time_label(i), fmt_g(v))),
                None => out.push_str(&format!("{},\n", self.time_label(i))),
            }
        }
        out
    }
}

/// Formats a value for CSV output with enough digits to round-trip.
fn fmt_g(v: f64) -> String {
    let s = format!("{v}");
    s
}

/// ACF or PACF values over lags 0..=max_lag with the +-1.96/sqrt(N) band.
#[derive(Debug, Clone, Serialize)]
pub struct Correlogram {
    pub max_lag: usize,
    /// values[k] is the correlation at lag k; values[0] == 1 for an ACF.
    pub values: Vec<f64>,
    pub confidence_bound: f64,
}

/// d-fold first differencing. The output is shorter by d.
pub fn difference(s: &TimeSeries, d: usize) -> Result<TimeSeries> {
    let values = s.complete_values()?;
    if d >= values.len() {
        return Err(Error::domain(format!(
            "cannot difference a series of length {} {} times",
            values.len(),
            d
        )));
    }
    let mut v = values.to_vec();
    for _ in 0..d {
        v = v.windows(2).map(|w| w[1] - w[0]).collect();
    }
    let per = s.period.per_year();
    let abs = s.start_sub + d as u32;
    Ok(TimeSeries {
        start_year: s.start_year + (abs / per) as i32,
        start_sub: abs % per,
        period: s.period,
        missing: vec![false; v.len()],
        values: v,
        units: s.units.clone(),
    })
}

/// Centers and scales to sample mean 0 and sample standard deviation 1
/// (denominator N-1).
pub fn standardize(s: &TimeSeries) -> Result<TimeSeries> {
    let values = s.complete_values()?;
    if values.len() < 2 {
        return Err(Error::domain("standardize needs at least 2 observations"));
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    if var <= 0.0 {
        return Err(Error::domain("cannot standardize a constant series"));
    }
    let sd = var.sqrt();
    let v: Vec<f64> = values.iter().map(|x| (x - mean) / sd).collect();
    Ok(TimeSeries {
        start_year: s.start_year,
        start_sub: s.start_sub,
        period: s.period,
        missing: vec![false; v.len()],
        values: v,
        units: "sd units".to_string(),
    })
}

/// Sample autocovariances with the biased 1/N estimator, lags 0..=max_lag.
pub(crate) fn autocovariances(values: &[f64], max_lag: usize) -> Vec<f64> {
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    let mut gamma = Vec::with_capacity(max_lag + 1);
    for k in 0..=max_lag {
        let mut acc = 0.0;
        for t in k..n {
            acc += (values[t] - mean) * (values[t - k] - mean);
        }
        gamma.push(acc / n as f64);
    }
    gamma
}

/// Sample ACF with the biased (1/N) autocovariance estimator, normalized by
/// lag 0.
pub fn acf(s: &TimeSeries, max_lag: usize) -> Result<Correlogram> {
    let values = s.complete_values()?;
    if max_lag >= values.len() {
        return Err(Error::domain("max_lag must be smaller than the series length"));
    }
    let gamma = autocovariances(values, max_lag);
    if gamma[0] <= 0.0 {
        return Err(Error::domain("ACF of a constant series is undefined"));
    }
    let values: Vec<f64> = gamma.iter().map(|g| g / gamma[0]).collect();
    Ok(Correlogram {
        max_lag,
        confidence_bound: 1.96 / (s.len() as f64).sqrt(),
        values,
    })
}

/// Sample PACF via the Durbin-Levinson recursion on the ACF.
///
/// values[0] is set to 1 by convention; pacf at lag 1 equals acf at lag 1.
pub fn pacf(s: &TimeSeries, max_lag: usize) -> Result<Correlogram> {
    let rho = acf(s, max_lag)?;
    let mut pac = vec![1.0; max_lag + 1];
    // phi[k][j] holds the AR(k) coefficients; only the previous row is kept.
    let mut prev: Vec<f64> = Vec::new();
    let mut prev_var: f64 = 1.0; // prediction error variance, in units of gamma0
    for k in 1..=max_lag {
        let mut num = rho.values[k];
        for (j, &pj) in prev.iter().enumerate() {
            num -= pj * rho.values[k - 1 - j];
        }
        if prev_var.abs() < 1e-14 {
            return Err(Error::numeric(
                "Durbin-Levinson breakdown: unit sample correlation",
            ));
        }
        let phi_kk = num / prev_var;
        let mut cur = vec![0.0; k];
        cur[k - 1] = phi_kk;
        for j in 0..k - 1 {
            cur[j] = prev[j] - phi_kk * prev[k - 2 - j];
        }
        prev_var *= 1.0 - phi_kk * phi_kk;
        pac[k] = phi_kk;
        prev = cur;
    }
    Ok(Correlogram {
        max_lag,
        confidence_bound: 1.96 / (s.len() as f64).sqrt(),
        values: pac,
    })
}

/// Training-set error measures for a fit.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ErrorMeasures {
    pub me: f64,
    pub rmse: f64,
    pub mae: f64,
    /// Mean absolute percentage error; None when an actual value is zero.
    pub mape: Option<f64>,
    /// Lag-1 autocorrelation of the residuals.
    pub acf1: f64,
}

/// ME, RMSE, MAE, MAPE and residual lag-1 autocorrelation for
/// e = actual - fitted.
pub fn error_measures(actual: &TimeSeries, fitted: &TimeSeries) -> Result<ErrorMeasures> {
    let a = actual.complete_values()?;
    let f = fitted.complete_values()?;
    if a.len() != f.len() {
        return Err(Error::domain("actual and fitted lengths differ"));
    }
    let n = a.len() as f64;
    let e: Vec<f64> = a.iter().zip(f.iter()).map(|(x, y)| x - y).collect();
    let me = e.iter().sum::<f64>() / n;
    let rmse = (e.iter().map(|v| v * v).sum::<f64>() / n).sqrt();
    let mae = e.iter().map(|v| v.abs()).sum::<f64>() / n;
    let mape = if a.iter().any(|&v| v == 0.0) {
        None
    } else {
        Some(100.0 * e.iter().zip(a.iter()).map(|(ei, ai)| (ei / ai).abs()).sum::<f64>() / n)
    };
    let acf1 = if e.len() >= 2 {
        let gamma = autocovariances(&e, 1);
        if gamma[0] > 0.0 {
            gamma[1] / gamma[0]
        } else {
            0.0
        }
    } else {
        0.0
    };
    Ok(ErrorMeasures {
        me,
        rmse,
        mae,
        mape,
        acf1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn ts(values: Vec<f64>) -> TimeSeries {
        TimeSeries::new(2000, Period::Annual, values, "x").unwrap()
    }

    #[test]
    fn difference_basic() {
        let s = ts(vec![1.0, 3.0, 6.0]);
        let d1 = difference(&s, 1).unwrap();
        assert_eq!(d1.raw_values(), &[2.0, 3.0]);
        assert_eq!(d1.start_year(), 2001);
        let d2 = difference(&s, 2).unwrap();
        assert_eq!(d2.raw_values(), &[1.0]);
        let d0 = difference(&s, 0).unwrap();
        assert_eq!(d0.raw_values(), s.raw_values());
    }

    #[test]
    fn difference_too_short() {
        let s = ts(vec![1.0, 2.0]);
        assert!(difference(&s, 2).is_err());
    }

    #[test]
    fn difference_twice_equals_d2() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let v: Vec<f64> = (0..40).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let s = ts(v);
        let twice = difference(&difference(&s, 1).unwrap(), 1).unwrap();
        let once = difference(&s, 2).unwrap();
        for (a, b) in twice.raw_values().iter().zip(once.raw_values()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn difference_inverts_cumulative_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let incr: Vec<f64> = (0..50).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let mut levels = vec![0.0];
        for &d in &incr {
            levels.push(levels.last().unwrap() + d);
        }
        let d = difference(&ts(levels), 1).unwrap();
        for (a, b) in d.raw_values().iter().zip(&incr) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn standardize_basic() {
        let s = ts(vec![1.0, 2.0, 3.0]);
        let z = standardize(&s).unwrap();
        assert_abs_diff_eq!(z.raw_values()[0], -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(z.raw_values()[1], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(z.raw_values()[2], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn standardize_idempotent_and_affine_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let v: Vec<f64> = (0..60).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let s = ts(v.clone());
        let z = standardize(&s).unwrap();
        let zz = standardize(&z).unwrap();
        for (a, b) in z.raw_values().iter().zip(zz.raw_values()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
        // standardize(a*s + b) = sign(a) * standardize(s)
        for &(a, b) in &[(2.5, -4.0), (-1.3, 10.0)] {
            let t = ts(v.iter().map(|x| a * x + b).collect());
            let zt = standardize(&t).unwrap();
            for (u, w) in zt.raw_values().iter().zip(z.raw_values()) {
                assert_abs_diff_eq!(*u, a.signum() * w, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn standardize_constant_errors() {
        assert!(standardize(&ts(vec![5.0, 5.0, 5.0])).is_err());
    }

    #[test]
    fn acf_lag0_is_one() {
        let s = ts(vec![1.0, 4.0, 2.0, 8.0, 3.0]);
        let c = acf(&s, 2).unwrap();
        assert_abs_diff_eq!(c.values[0], 1.0, epsilon = 1e-15);
        for v in &c.values {
            assert!(v.abs() <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn acf_white_noise_stays_in_band() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let v: Vec<f64> = (0..10_000).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let c = acf(&ts(v), 20).unwrap();
        for k in 1..=20 {
            assert!(
                c.values[k].abs() < 0.05,
                "lag {} acf {} exceeds bound",
                k,
                c.values[k]
            );
        }
    }

    #[test]
    fn acf_ar1_matches_population_value() {
        // AR(1) with phi = 0.8: population acf[1] = 0.8.
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let n = 20_000;
        let mut v = vec![0.0_f64; n];
        for t in 1..n {
            let e: f64 = rng.sample(StandardNormal);
            v[t] = 0.8 * v[t - 1] + e;
        }
        let c = acf(&ts(v), 3).unwrap();
        assert!(c.values[1] > 0.77 && c.values[1] < 0.83, "acf1 = {}", c.values[1]);
    }

    #[test]
    fn acf_reversal_invariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let v: Vec<f64> = (0..200).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let mut rev = v.clone();
        rev.reverse();
        let a = acf(&ts(v), 10).unwrap();
        let b = acf(&ts(rev), 10).unwrap();
        for k in 0..=10 {
            assert_abs_diff_eq!(a.values[k], b.values[k], epsilon = 1e-12);
        }
    }

    #[test]
    fn pacf_lag1_equals_acf1() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let v: Vec<f64> = (0..300).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let s = ts(v);
        let a = acf(&s, 5).unwrap();
        let p = pacf(&s, 5).unwrap();
        assert_abs_diff_eq!(p.values[1], a.values[1], epsilon = 1e-12);
    }

    #[test]
    fn pacf_ar1_truncates_after_lag1() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let n = 20_000;
        let mut v = vec![0.0_f64; n];
        for t in 1..n {
            let e: f64 = rng.sample(StandardNormal);
            v[t] = 0.5 * v[t - 1] + e;
        }
        let p = pacf(&ts(v), 10).unwrap();
        assert!(p.values[1] > 0.47 && p.values[1] < 0.53, "pacf1 = {}", p.values[1]);
        for k in 2..=10 {
            assert!(p.values[k].abs() < 0.05, "pacf[{}] = {}", k, p.values[k]);
        }
    }

    #[test]
    fn pacf_ma1_decays() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let n = 20_000;
        let mut prev_e = 0.0;
        let mut v = Vec::with_capacity(n);
        for _ in 0..n {
            let e: f64 = rng.sample(StandardNormal);
            v.push(e + 0.7 * prev_e);
            prev_e = e;
        }
        let p = pacf(&ts(v), 6).unwrap();
        assert!(p.values[5].abs() < p.values[1].abs());
    }

    #[test]
    fn pacf_matches_yule_walker_regression_oracle() {
        // Oracle: the PACF at lag m is the last coefficient of the AR(m)
        // Yule-Walker fit, solved here as a dense linear system.
        use crate::linalg::{lu_solve, Mat};
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..5 {
            let v: Vec<f64> = (0..400).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
            let s = ts(v.clone());
            let p = pacf(&s, 10).unwrap();
            let rho = acf(&s, 10).unwrap();
            for m in 1..=10usize {
                let mut a = Mat::zeros(m, m);
                let mut b = vec![0.0; m];
                for i in 0..m {
                    for j in 0..m {
                        a.set(i, j, rho.values[(i as isize - j as isize).unsigned_abs()]);
                    }
                    b[i] = rho.values[i + 1];
                }
                let phi = lu_solve(&a, &b).expect("YW system solvable");
                assert_abs_diff_eq!(p.values[m], phi[m - 1], epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn error_measures_zero_residuals() {
        let a = ts(vec![1.0, 2.0, 3.0]);
        let m = error_measures(&a, &a.clone()).unwrap();
        assert_eq!(m.me, 0.0);
        assert_eq!(m.rmse, 0.0);
        assert_eq!(m.mae, 0.0);
        assert_eq!(m.mape, Some(0.0));
    }

    #[test]
    fn error_measures_arithmetic() {
        let a = ts(vec![2.0, 4.0]);
        let f = ts(vec![1.0, 5.0]);
        let m = error_measures(&a, &f).unwrap();
        assert_abs_diff_eq!(m.me, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(m.rmse, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(m.mae, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(m.mape.unwrap(), 37.5, epsilon = 1e-12);
    }

    #[test]
    fn error_measures_zero_actual_omits_mape() {
        let a = ts(vec![0.0, 4.0]);
        let f = ts(vec![1.0, 5.0]);
        let m = error_measures(&a, &f).unwrap();
        assert!(m.mape.is_none());
    }

    #[test]
    fn missing_values_are_rejected() {
        let s = TimeSeries::with_missing(
            2000,
            Period::Annual,
            vec![Some(1.0), None, Some(3.0)],
            "x",
        )
        .unwrap();
        assert!(difference(&s, 1).is_err());
        assert!(standardize(&s).is_err());
        assert!(acf(&s, 1).is_err());
    }

    #[test]
    fn trim_missing_ends() {
        let s = TimeSeries::with_missing(
            2000,
            Period::Annual,
            vec![None, Some(1.0), Some(2.0), None],
            "x",
        )
        .unwrap();
        let t = s.trim_missing().unwrap();
        assert_eq!(t.start_year(), 2001);
        assert_eq!(t.raw_values(), &[1.0, 2.0]);
        let interior = TimeSeries::with_missing(
            2000,
            Period::Annual,
            vec![Some(1.0), None, Some(2.0)],
            "x",
        )
        .unwrap();
        assert!(interior.trim_missing().is_err());
    }

    #[test]
    fn csv_round_trips_labels() {
        let s = TimeSeries::new(1950, Period::Monthly, vec![1.5, 2.5], "degC").unwrap();
        let csv = s.to_csv();
        assert!(csv.contains("1950-01,1.5"));
        assert!(csv.contains("1950-02,2.5"));
    }
}
