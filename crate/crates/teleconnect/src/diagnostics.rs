//! Residual adequacy testing: the Ljung-Box portmanteau test plus
//! histogram/density data for residual diagnostic plots.

use serde::Serialize;

use crate::series::{acf, Correlogram, TimeSeries};
use crate::special::chi_square_sf;
use crate::{Error, Result};

/// Ljung-Box test outcome.
#[derive(Debug, Clone, Serialize)]
pub struct LjungBoxResult {
    /// The Q* statistic.
    pub q_star: f64,
    pub lags: usize,
    /// Number of parameters fitted to produce the residuals.
    pub fitdf: usize,
    /// Chi-square degrees of freedom: lags - fitdf.
    pub df: usize,
    pub p_value: f64,
}

/// Ljung-Box portmanteau test that residual autocorrelations up to `lags`
/// are jointly zero.
///
/// Q* = N(N+2) sum_{k=1..lags} r_k^2 / (N-k), referred to a chi-square
/// with lags - fitdf degrees of freedom.
pub fn ljung_box(residuals: &TimeSeries, lags: usize, fitdf: usize) -> Result<LjungBoxResult> {
    if lags <= fitdf {
        return Err(Error::domain("lags must exceed fitdf"));
    }
    let n = residuals.len();
    if n <= lags {
        return Err(Error::domain("residual series shorter than the lag horizon"));
    }
    let r = acf(residuals, lags)?; // errors on constant residuals
    let nf = n as f64;
    let mut q = 0.0;
    for k in 1..=lags {
        q += r.values[k] * r.values[k] / (nf - k as f64);
    }
    q *= nf * (nf + 2.0);
    let df = lags - fitdf;
    let p_value = chi_square_sf(q, df as f64);
    Ok(LjungBoxResult {
        q_star: q,
        lags,
        fitdf,
        df,
        p_value,
    })
}

/// Histogram with Freedman-Diaconis bin width.
#[derive(Debug, Clone, Serialize)]
pub struct Histogram {
    /// Bin edges, length counts.len() + 1.
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
}

/// Residual diagnostics bundle backing the diagnostic figure: ACF with
/// confidence bounds, histogram, and a Gaussian-kernel density curve.
#[derive(Debug, Clone, Serialize)]
pub struct ResidualReport {
    pub acf: Correlogram,
    pub histogram: Histogram,
    /// (x, density) pairs on 512 equispaced points.
    pub density: Vec<(f64, f64)>,
}

fn quartiles(sorted: &[f64]) -> (f64, f64) {
    // Linear interpolation quantile (type 7).
    let q = |p: f64| -> f64 {
        let h = p * (sorted.len() - 1) as f64;
        let lo = h.floor() as usize;
        let hi = h.ceil() as usize;
        sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
    };
    (q(0.25), q(0.75))
}

/// ACF, Freedman-Diaconis histogram and Silverman-bandwidth kernel density
/// for a residual series.
pub fn residual_report(residuals: &TimeSeries, max_lag: usize) -> Result<ResidualReport> {
    let values = residuals.complete_values()?;
    let n = values.len();
    if n < 20 {
        return Err(Error::domain("residual report needs at least 20 observations"));
    }
    let correlogram = acf(residuals, max_lag)?;

    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let (q1, q3) = quartiles(&sorted);
    let iqr = q3 - q1;
    let lo = sorted[0];
    let hi = sorted[n - 1];
    let fd_width = 2.0 * iqr / (n as f64).powf(1.0 / 3.0);
    let width = if fd_width > 0.0 {
        fd_width
    } else {
        (hi - lo).max(1e-12)
    };
    let n_bins = (((hi - lo) / width).ceil() as usize).max(1);
    let mut edges = Vec::with_capacity(n_bins + 1);
    for i in 0..=n_bins {
        edges.push(lo + width * i as f64);
    }
    let mut counts = vec![0usize; n_bins];
    for &v in values {
        let mut idx = ((v - lo) / width) as usize;
        if idx >= n_bins {
            idx = n_bins - 1;
        }
        counts[idx] += 1;
    }

    // Silverman bandwidth over 512 equispaced points.
    let mean = values.iter().sum::<f64>() / n as f64;
    let sd = (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0)).sqrt();
    let spread = sd.min(iqr / 1.34).max(1e-12);
    let h = 0.9 * spread * (n as f64).powf(-0.2);
    let x_lo = lo - 3.0 * h;
    let x_hi = hi + 3.0 * h;
    let step = (x_hi - x_lo) / 511.0;
    let norm = 1.0 / (n as f64 * h * (2.0 * std::f64::consts::PI).sqrt());
    let mut density = Vec::with_capacity(512);
    for i in 0..512 {
        let x = x_lo + step * i as f64;
        let mut acc = 0.0;
        for &v in values {
            let z = (x - v) / h;
            acc += (-0.5 * z * z).exp();
        }
        density.push((x, norm * acc));
    }

    Ok(ResidualReport {
        acf: correlogram,
        histogram: Histogram { edges, counts },
        density,
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

    /// Builds a vector whose centered sample autocorrelations vanish at
    /// lags 1..=max_lag, by iterated projection.
    fn orthogonalized_residuals(n: usize, max_lag: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut e: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        for _ in 0..200 {
            let mean = e.iter().sum::<f64>() / n as f64;
            for v in e.iter_mut() {
                *v -= mean;
            }
            for k in 1..=max_lag {
                let denom: f64 = e.iter().map(|v| v * v).sum();
                let num: f64 = (k..n).map(|t| e[t] * e[t - k]).sum();
                let c = num / denom;
                // subtract the lag-k projection
                let shifted: Vec<f64> = (0..n)
                    .map(|t| if t >= k { e[t - k] } else { 0.0 })
                    .collect();
                for t in 0..n {
                    e[t] -= c * shifted[t];
                }
            }
        }
        e
    }

    #[test]
    fn zero_autocorrelation_gives_zero_q() {
        let e = orthogonalized_residuals(120, 10, 3);
        let r = crate::series::acf(&ts(e.clone()), 10).unwrap();
        for k in 1..=10 {
            assert!(r.values[k].abs() < 1e-10, "lag {k}: {}", r.values[k]);
        }
        let lb = ljung_box(&ts(e), 10, 3).unwrap();
        assert!(lb.q_star < 1e-16);
        assert_abs_diff_eq!(lb.p_value, 1.0, epsilon = 1e-12);
        assert_eq!(lb.df, 7);
    }

    #[test]
    fn q_star_scale_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(44);
        let e: Vec<f64> = (0..150).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let a = ljung_box(&ts(e.clone()), 10, 2).unwrap();
        let b = ljung_box(&ts(e.iter().map(|v| 37.5 * v).collect()), 10, 2).unwrap();
        assert_abs_diff_eq!(a.q_star, b.q_star, epsilon = 1e-10);
    }

    #[test]
    fn p_value_monotone_in_q() {
        let mut prev = 1.0;
        for i in 1..60 {
            let q = i as f64 * 0.5;
            let p = chi_square_sf(q, 7.0);
            assert!(p <= prev);
            prev = p;
        }
    }

    #[test]
    fn autocorrelated_residuals_reject() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut e = vec![0.0_f64; 300];
        for t in 1..300 {
            let z: f64 = rng.sample(StandardNormal);
            e[t] = 0.7 * e[t - 1] + z;
        }
        let lb = ljung_box(&ts(e), 10, 0).unwrap();
        assert!(lb.p_value < 0.01);
    }

    #[test]
    fn lags_must_exceed_fitdf() {
        let e = ts(vec![1.0; 50]);
        assert!(ljung_box(&e, 5, 5).is_err());
    }

    #[test]
    fn constant_residuals_error() {
        let e = ts(vec![2.0; 50]);
        assert!(ljung_box(&e, 10, 2).is_err());
        assert!(residual_report(&e, 10).is_err());
    }

    #[test]
    fn white_noise_acf_mostly_in_bounds() {
        let mut rng = ChaCha8Rng::seed_from_u64(55);
        let e: Vec<f64> = (0..10_000).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let rep = residual_report(&ts(e), 20).unwrap();
        let outside = (1..=20)
            .filter(|&k| rep.acf.values[k].abs() > rep.acf.confidence_bound)
            .count();
        assert!(outside <= 2, "{outside} of 20 lags outside the 95% band");
    }

    #[test]
    fn histogram_counts_sum_to_n() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let e: Vec<f64> = (0..500).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let rep = residual_report(&ts(e), 10).unwrap();
        assert_eq!(rep.histogram.counts.iter().sum::<usize>(), 500);
        assert_eq!(rep.histogram.edges.len(), rep.histogram.counts.len() + 1);
        assert_eq!(rep.density.len(), 512);
        // Density integrates to ~1.
        let step = rep.density[1].0 - rep.density[0].0;
        let mass: f64 = rep.density.iter().map(|(_, d)| d * step).sum();
        assert!((mass - 1.0).abs() < 0.02, "mass = {mass}");
    }
}
