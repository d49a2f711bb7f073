//! Frequency-domain engine: detrended/tapered periodogram, Daniell-kernel
//! smoothing, cross-spectrum, squared coherence and F-based significance
//! thresholds.
//!
//! Scaling convention: with z the (optionally detrended) tapered series,
//! the auto-periodogram at the Fourier frequencies k/N (0 < k/N <= 1/2) is
//! 2|Z_k|^2/N (Nyquist term undoubled), so the sum over all ordinates
//! equals the sum of squares of z about its mean and 1/N times the sum
//! recovers the biased variance. Smoothing is a circular convolution over
//! the ordinates and preserves that sum.

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::series::TimeSeries;
use crate::special::f_quantile;
use crate::{Error, Result};

/// Smoothing kernel applied to periodogram ordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Kernel {
    /// Flat moving average of width `span`.
    #[default]
    Daniell,
    /// Flat kernel with half-weight endpoints.
    ModifiedDaniell,
}

impl std::str::FromStr for Kernel {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "daniell" => Ok(Kernel::Daniell),
            "modified" | "modified_daniell" => Ok(Kernel::ModifiedDaniell),
            other => Err(Error::Usage(format!("unknown kernel '{other}'"))),
        }
    }
}

/// Cross-spectral estimate for a pair of equal-length series.
#[derive(Debug, Clone)]
pub struct SpectralEstimate {
    /// Fourier frequencies k/N in cycles per time unit, k = 1..floor(N/2).
    pub freqs: Vec<f64>,
    pub f_xx: Vec<f64>,
    pub f_yy: Vec<f64>,
    pub f_xy: Vec<Complex64>,
    /// Squared coherence at each frequency.
    pub coherence: Vec<f64>,
    /// Observation count the estimate was computed from.
    pub n: usize,
    pub span: usize,
    pub kernel: Kernel,
}

/// Significance threshold for smoothed squared coherence.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CoherenceThreshold {
    /// Smoothing span the threshold assumes.
    pub l: usize,
    /// Observation count.
    pub n: usize,
    /// Equivalent degrees of freedom 2L(N-1)/N.
    pub df: f64,
    /// Upper alpha quantile of F(2, df-2).
    pub f_crit: f64,
    /// Coherence must exceed C = F_crit / (df + F_crit).
    pub c: f64,
    pub alpha: f64,
}

/// A maximal run of consecutive Fourier frequencies with significant
/// coherence, with the equivalent period range.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct FrequencyBand {
    pub lo: f64,
    pub hi: f64,
    /// 1/hi: the shortest period in the band.
    pub period_lo: f64,
    /// 1/lo: the longest period in the band.
    pub period_hi: f64,
}

/// Removes an OLS straight line (intercept and slope) in place.
fn detrend_in_place(z: &mut [f64]) {
    let n = z.len() as f64;
    let t_mean = (n - 1.0) / 2.0;
    let z_mean = z.iter().sum::<f64>() / n;
    let mut stz = 0.0;
    let mut stt = 0.0;
    for (i, v) in z.iter().enumerate() {
        let dt = i as f64 - t_mean;
        stz += dt * (v - z_mean);
        stt += dt * dt;
    }
    let slope = if stt > 0.0 { stz / stt } else { 0.0 };
    for (i, v) in z.iter_mut().enumerate() {
        *v -= z_mean + slope * (i as f64 - t_mean);
    }
}

/// Split-cosine-bell taper over fraction `p` of each end of the series.
fn taper_in_place(z: &mut [f64], p: f64) {
    let n = z.len();
    let m = (n as f64 * p).floor() as usize;
    for i in 0..m {
        let w = 0.5 * (1.0 - (std::f64::consts::PI * (i as f64 + 0.5) / m as f64).cos());
        z[i] *= w;
        z[n - 1 - i] *= w;
    }
}

/// Forward DFT of a real series.
fn dft(z: &[f64]) -> Vec<Complex64> {
    let mut buf: Vec<Complex64> = z.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(buf.len());
    fft.process(&mut buf);
    buf
}

/// Circular Daniell smoothing of a vector of ordinates.
pub fn daniell_smooth(values: &[f64], span: usize, kernel: Kernel) -> Result<Vec<f64>> {
    let weights = kernel_weights(span)?;
    let (flat, modified) = weights;
    Ok(convolve_circular(values, span, flat, modified, kernel))
}

fn kernel_weights(span: usize) -> Result<(f64, f64)> {
    if span % 2 == 0 {
        return Err(Error::domain("smoothing span must be odd"));
    }
    if span == 1 {
        return Ok((1.0, 0.0));
    }
    // (interior weight, endpoint weight) for the two kernels; the flat
    // kernel uses the interior weight everywhere.
    Ok((1.0 / span as f64, 1.0 / (2 * (span - 1)) as f64))
}

fn convolve_circular(
    values: &[f64],
    span: usize,
    flat_w: f64,
    end_w: f64,
    kernel: Kernel,
) -> Vec<f64> {
    let m = values.len();
    if span == 1 || m == 0 {
        return values.to_vec();
    }
    let h = (span - 1) / 2;
    let interior_w = match kernel {
        Kernel::Daniell => flat_w,
        Kernel::ModifiedDaniell => 1.0 / (span - 1) as f64,
    };
    let mut out = vec![0.0; m];
    for (i, o) in out.iter_mut().enumerate() {
        let mut acc = 0.0;
        for j in 0..span {
            let offset = j as isize - h as isize;
            let idx = (i as isize + offset).rem_euclid(m as isize) as usize;
            let w = match kernel {
                Kernel::Daniell => interior_w,
                Kernel::ModifiedDaniell => {
                    if j == 0 || j == span - 1 {
                        end_w
                    } else {
                        interior_w
                    }
                }
            };
            acc += w * values[idx];
        }
        *o = acc;
    }
    out
}

fn convolve_circular_complex(
    values: &[Complex64],
    span: usize,
    kernel: Kernel,
) -> Vec<Complex64> {
    let re: Vec<f64> = values.iter().map(|c| c.re).collect();
    let im: Vec<f64> = values.iter().map(|c| c.im).collect();
    let (flat, end) = kernel_weights(span).expect("validated span");
    let sre = convolve_circular(&re, span, flat, end, kernel);
    let sim = convolve_circular(&im, span, flat, end, kernel);
    sre.into_iter()
        .zip(sim)
        .map(|(r, i)| Complex64::new(r, i))
        .collect()
}

/// Raw (unsmoothed) auto/cross periodogram ordinates for a prepared pair.
fn raw_periodograms(zx: &[f64], zy: &[f64]) -> (Vec<f64>, Vec<f64>, Vec<Complex64>, Vec<f64>) {
    let n = zx.len();
    let m = n / 2;
    let fx = dft(zx);
    let fy = dft(zy);
    let mut ixx = Vec::with_capacity(m);
    let mut iyy = Vec::with_capacity(m);
    let mut ixy = Vec::with_capacity(m);
    let mut freqs = Vec::with_capacity(m);
    for k in 1..=m {
        // Doubling folds the symmetric negative frequencies in; the
        // Nyquist ordinate of an even-length series has no mirror.
        let factor = if n % 2 == 0 && k == m { 1.0 } else { 2.0 };
        let scale = factor / n as f64;
        ixx.push(scale * fx[k].norm_sqr());
        iyy.push(scale * fy[k].norm_sqr());
        ixy.push(fx[k] * fy[k].conj() * scale);
        freqs.push(k as f64 / n as f64);
    }
    (ixx, iyy, ixy, freqs)
}

/// Options for [`periodogram_pair_with`].
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SpectralOptions {
    pub span: usize,
    pub detrend: bool,
    /// Fraction of each end of the series covered by the cosine-bell
    /// taper.
    pub taper: f64,
    pub kernel: Kernel,
}

impl Default for SpectralOptions {
    fn default() -> Self {
        SpectralOptions {
            span: 9,
            detrend: true,
            taper: 0.1,
            kernel: Kernel::Daniell,
        }
    }
}

/// Smoothed auto-spectra, cross-spectrum and squared coherence for a pair
/// of series, with the flat Daniell kernel.
pub fn periodogram_pair(
    x: &TimeSeries,
    y: &TimeSeries,
    span: usize,
    detrend: bool,
    taper: f64,
) -> Result<SpectralEstimate> {
    periodogram_pair_with(
        x,
        y,
        &SpectralOptions {
            span,
            detrend,
            taper,
            kernel: Kernel::Daniell,
        },
    )
}

/// As [`periodogram_pair`] with an explicit kernel choice.
pub fn periodogram_pair_with(
    x: &TimeSeries,
    y: &TimeSeries,
    opts: &SpectralOptions,
) -> Result<SpectralEstimate> {
    let xv = x.complete_values()?;
    let yv = y.complete_values()?;
    if xv.len() != yv.len() {
        return Err(Error::domain("series lengths differ"));
    }
    if opts.span % 2 == 0 || opts.span < 3 {
        return Err(Error::domain("smoothing span must be odd and >= 3"));
    }
    let n = xv.len();
    if n < 4 * opts.span {
        return Err(Error::domain("series too short for the smoothing span"));
    }
    if !(0.0..=0.5).contains(&opts.taper) {
        return Err(Error::domain("taper fraction must be in [0, 0.5]"));
    }

    let mut zx = xv.to_vec();
    let mut zy = yv.to_vec();
    if opts.detrend {
        detrend_in_place(&mut zx);
        detrend_in_place(&mut zy);
    }
    taper_in_place(&mut zx, opts.taper);
    taper_in_place(&mut zy, opts.taper);

    let (ixx, iyy, ixy, freqs) = raw_periodograms(&zx, &zy);
    let (flat, end) = kernel_weights(opts.span)?;
    let f_xx = convolve_circular(&ixx, opts.span, flat, end, opts.kernel);
    let f_yy = convolve_circular(&iyy, opts.span, flat, end, opts.kernel);
    let f_xy = convolve_circular_complex(&ixy, opts.span, opts.kernel);

    let coherence: Vec<f64> = f_xy
        .iter()
        .zip(f_xx.iter().zip(&f_yy))
        .map(|(cross, (sxx, syy))| {
            let denom = sxx * syy;
            if denom <= 0.0 {
                0.0
            } else {
                cross.norm_sqr() / denom
            }
        })
        .collect();

    Ok(SpectralEstimate {
        freqs,
        f_xx,
        f_yy,
        f_xy,
        coherence,
        n,
        span: opts.span,
        kernel: opts.kernel,
    })
}

/// Significance threshold C for smoothed squared coherence at level alpha:
/// df = 2L(N-1)/N, C = F_crit/(df + F_crit) with F_crit the upper alpha
/// quantile of F(2, df-2).
pub fn coherence_threshold(n: usize, l: usize, alpha: f64) -> Result<CoherenceThreshold> {
    if !(0.0 < alpha && alpha < 0.5) {
        return Err(Error::domain("alpha must be in (0, 0.5)"));
    }
    if n < 2 || l == 0 {
        return Err(Error::domain("need N >= 2 and L >= 1"));
    }
    let df = 2.0 * l as f64 * (n as f64 - 1.0) / n as f64;
    if df <= 2.0 {
        return Err(Error::domain("degrees of freedom too small (df <= 2)"));
    }
    let f_crit = f_quantile(1.0 - alpha, 2.0, df - 2.0)?;
    let c = f_crit / (df + f_crit);
    Ok(CoherenceThreshold {
        l,
        n,
        df,
        f_crit,
        c,
        alpha,
    })
}

/// Maximal runs of consecutive Fourier frequencies with coherence above
/// the threshold.
pub fn significant_bands(
    est: &SpectralEstimate,
    thr: &CoherenceThreshold,
) -> Result<Vec<FrequencyBand>> {
    if est.n != thr.n {
        return Err(Error::domain(
            "threshold was computed for a different sample count",
        ));
    }
    let mut bands = Vec::new();
    let mut run_start: Option<usize> = None;
    for i in 0..=est.coherence.len() {
        let above = i < est.coherence.len() && est.coherence[i] > thr.c;
        match (above, run_start) {
            (true, None) => run_start = Some(i),
            (false, Some(s)) => {
                let lo = est.freqs[s];
                let hi = est.freqs[i - 1];
                bands.push(FrequencyBand {
                    lo,
                    hi,
                    period_lo: 1.0 / hi,
                    period_hi: 1.0 / lo,
                });
                run_start = None;
            }
            _ => {}
        }
    }
    Ok(bands)
}

/// Frequency of maximal squared coherence; ties break toward the lower
/// frequency.
pub fn peak_coherence(est: &SpectralEstimate) -> (f64, f64) {
    let mut best = 0usize;
    for i in 1..est.coherence.len() {
        if est.coherence[i] > est.coherence[best] {
            best = i;
        }
    }
    (est.freqs[best], est.coherence[best])
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

    fn white(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
    }

    #[test]
    fn dft_matches_brute_force_sum() {
        // O(N^2) oracle with direct cos/sin accumulation.
        for &n in &[8usize, 13, 37, 64] {
            let z = white(n, n as u64);
            let fast = dft(&z);
            for k in 0..n {
                let mut re = 0.0;
                let mut im = 0.0;
                for (t, &v) in z.iter().enumerate() {
                    let ang = -2.0 * std::f64::consts::PI * (k * t) as f64 / n as f64;
                    re += v * ang.cos();
                    im += v * ang.sin();
                }
                assert_abs_diff_eq!(fast[k].re, re, epsilon = 1e-9);
                assert_abs_diff_eq!(fast[k].im, im, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn identical_series_have_unit_coherence() {
        let v = white(120, 3);
        let est = periodogram_pair(&ts(v.clone()), &ts(v), 9, true, 0.1).unwrap();
        for (f, c) in est.freqs.iter().zip(&est.coherence) {
            assert!((c - 1.0).abs() < 1e-12, "coherence {c} at frequency {f}");
        }
    }

    #[test]
    fn sinusoid_peaks_at_its_frequency() {
        let n = 200;
        let v: Vec<f64> = (0..n)
            .map(|t| (2.0 * std::f64::consts::PI * t as f64 / 10.0).sin())
            .collect();
        let est = periodogram_pair(&ts(v.clone()), &ts(v), 3, true, 0.1).unwrap();
        let mut best = 0;
        for i in 1..est.f_xx.len() {
            if est.f_xx[i] > est.f_xx[best] {
                best = i;
            }
        }
        assert!((est.freqs[best] - 0.1).abs() <= 1.0 / n as f64 + 1e-12);
    }

    #[test]
    fn independent_noise_has_low_mean_coherence() {
        let est = periodogram_pair(&ts(white(1000, 11)), &ts(white(1000, 222)), 9, true, 0.1)
            .unwrap();
        let mean: f64 = est.coherence.iter().sum::<f64>() / est.coherence.len() as f64;
        assert!(mean < 0.15, "mean coherence {mean}");
    }

    #[test]
    fn coherence_bounded_and_affine_invariant() {
        let x = white(300, 5);
        let y = white(300, 6);
        let base = periodogram_pair(&ts(x.clone()), &ts(y.clone()), 9, true, 0.1).unwrap();
        for &c in &base.coherence {
            assert!((-1e-12..=1.0 + 1e-12).contains(&c));
        }
        let xs: Vec<f64> = x.iter().map(|v| -2.5 * v + 7.0).collect();
        let ys: Vec<f64> = y.iter().map(|v| 0.3 * v - 11.0).collect();
        let scaled = periodogram_pair(&ts(xs), &ts(ys), 9, true, 0.1).unwrap();
        for (a, b) in base.coherence.iter().zip(&scaled.coherence) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-10);
        }
    }

    #[test]
    fn parseval_sum_of_squares() {
        for &n in &[128usize, 73, 169] {
            let v = white(n, 500 + n as u64);
            // Prepare exactly as the periodogram does.
            let mut z = v.clone();
            detrend_in_place(&mut z);
            taper_in_place(&mut z, 0.1);
            let zbar = z.iter().sum::<f64>() / n as f64;
            let ss: f64 = z.iter().map(|x| (x - zbar) * (x - zbar)).sum();
            let (ixx, _, _, _) = raw_periodograms(&z, &z);
            let total: f64 = ixx.iter().sum();
            assert_abs_diff_eq!(total, ss, epsilon = 1e-8 * ss.max(1.0));
        }
    }

    #[test]
    fn smoothing_preserves_ordinate_sum() {
        let v = white(90, 77);
        let raw: Vec<f64> = v.iter().map(|x| x * x).collect();
        for kernel in [Kernel::Daniell, Kernel::ModifiedDaniell] {
            let sm = daniell_smooth(&raw, 9, kernel).unwrap();
            let a: f64 = raw.iter().sum();
            let b: f64 = sm.iter().sum();
            assert_abs_diff_eq!(a, b, epsilon = 1e-9 * a.abs());
        }
    }

    #[test]
    fn span_one_smoothing_is_identity() {
        let v = white(50, 8);
        let sm = daniell_smooth(&v, 1, Kernel::Daniell).unwrap();
        assert_eq!(v, sm);
    }

    #[test]
    fn even_span_rejected() {
        let x = ts(white(100, 1));
        assert!(periodogram_pair(&x, &x, 8, true, 0.1).is_err());
        assert!(daniell_smooth(&[1.0, 2.0], 4, Kernel::Daniell).is_err());
    }

    #[test]
    fn length_mismatch_rejected() {
        let x = ts(white(100, 1));
        let y = ts(white(99, 2));
        assert!(periodogram_pair(&x, &y, 9, true, 0.1).is_err());
    }

    #[test]
    fn threshold_reference_values() {
        // N=73 annual overlap: df = 18*72/73, C ~ 0.2606.
        let t = coherence_threshold(73, 9, 0.01).unwrap();
        assert_abs_diff_eq!(t.df, 18.0 * 72.0 / 73.0, epsilon = 1e-12);
        assert_abs_diff_eq!(t.c, 0.2606, epsilon = 5e-3);
        assert_abs_diff_eq!(t.f_crit, 6.257, epsilon = 2e-2);
        // df = 17.94 case: N = 300 gives exactly that df and C ~ 0.2579.
        let t2 = coherence_threshold(300, 9, 0.01).unwrap();
        assert_abs_diff_eq!(t2.df, 17.94, epsilon = 1e-12);
        assert_abs_diff_eq!(t2.c, 0.2579, epsilon = 5e-3);
    }

    #[test]
    fn threshold_matches_bisection_oracle_at_large_alpha() {
        // Brute-force route: find F_crit by bisecting the F CDF, then form
        // C the same way.
        let n = 500;
        let l = 9;
        let alpha = 0.49;
        let t = coherence_threshold(n, l, alpha).unwrap();
        let df = 2.0 * l as f64 * (n as f64 - 1.0) / n as f64;
        let mut lo = 0.0;
        let mut hi = 1e4;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if crate::special::f_cdf(mid, 2.0, df - 2.0) < 1.0 - alpha {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let f_crit = 0.5 * (lo + hi);
        let c = f_crit / (df + f_crit);
        assert_abs_diff_eq!(t.c, c, epsilon = 1e-6);
    }

    #[test]
    fn threshold_rejects_bad_inputs() {
        assert!(coherence_threshold(73, 9, 0.6).is_err());
        assert!(coherence_threshold(73, 9, 0.0).is_err());
        assert!(coherence_threshold(2, 1, 0.01).is_err()); // df <= 2
    }

    #[test]
    fn no_bands_when_coherence_zero() {
        let mut est = periodogram_pair(&ts(white(100, 1)), &ts(white(100, 2)), 9, true, 0.1)
            .unwrap();
        for c in est.coherence.iter_mut() {
            *c = 0.0;
        }
        let thr = coherence_threshold(100, 9, 0.01).unwrap();
        assert!(significant_bands(&est, &thr).unwrap().is_empty());
    }

    #[test]
    fn bands_require_matching_sample_count() {
        let est = periodogram_pair(&ts(white(100, 1)), &ts(white(100, 2)), 9, true, 0.1).unwrap();
        let thr = coherence_threshold(99, 9, 0.01).unwrap();
        assert!(significant_bands(&est, &thr).is_err());
    }

    #[test]
    fn coupled_sinusoid_pair_peaks_at_shared_frequency() {
        let n = 240;
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let sine: Vec<f64> = (0..n)
            .map(|t| (2.0 * std::f64::consts::PI * t as f64 / 8.0).sin())
            .collect();
        let x: Vec<f64> = sine
            .iter()
            .map(|s| s + 0.3 * rng.sample::<f64, _>(StandardNormal))
            .collect();
        let y: Vec<f64> = sine
            .iter()
            .map(|s| s + 0.3 * rng.sample::<f64, _>(StandardNormal))
            .collect();
        // A narrow span keeps the coherence peak pinned to the line
        // component instead of the smoothing plateau around it.
        let est = periodogram_pair(&ts(x), &ts(y), 3, true, 0.1).unwrap();
        let (freq, coh) = peak_coherence(&est);
        assert!((freq - 0.125).abs() <= 1.0 / n as f64 + 1e-12, "peak at {freq}");
        assert!(coh > 0.5);
    }

    #[test]
    fn peak_tie_breaks_to_lower_frequency() {
        let v = white(120, 21);
        let est = periodogram_pair(&ts(v.clone()), &ts(v), 9, true, 0.1).unwrap();
        // Identical series: coherence is 1 everywhere, so the tie-break
        // must return the lowest Fourier frequency.
        let (freq, _) = peak_coherence(&est);
        assert_abs_diff_eq!(freq, 1.0 / 120.0, epsilon = 1e-15);
    }

    #[test]
    fn coupled_band_detected() {
        // Band-limited coupling: x drives y only near frequency 0.25.
        let n = 360;
        let mut rng = ChaCha8Rng::seed_from_u64(30);
        let carrier: Vec<f64> = (0..n)
            .map(|t| {
                (2.0 * std::f64::consts::PI * t as f64 * 0.25).sin()
                    + 0.8 * (2.0 * std::f64::consts::PI * t as f64 * 0.26).cos()
            })
            .collect();
        let x: Vec<f64> = carrier
            .iter()
            .map(|c| c + 0.5 * rng.sample::<f64, _>(StandardNormal))
            .collect();
        let y: Vec<f64> = carrier
            .iter()
            .map(|c| c + 0.5 * rng.sample::<f64, _>(StandardNormal))
            .collect();
        let est = periodogram_pair(&ts(x), &ts(y), 9, true, 0.1).unwrap();
        let thr = coherence_threshold(n, 9, 0.01).unwrap();
        let bands = significant_bands(&est, &thr).unwrap();
        assert!(
            bands.iter().any(|b| b.lo <= 0.25 && 0.25 <= b.hi),
            "no band covering 0.25: {bands:?}"
        );
        for b in &bands {
            assert_abs_diff_eq!(b.period_lo, 1.0 / b.hi, epsilon = 1e-12);
            assert_abs_diff_eq!(b.period_hi, 1.0 / b.lo, epsilon = 1e-12);
        }
    }
}
