//! Exact Gaussian maximum-likelihood estimation of ARIMA(p,d,q) models with
//! optional drift and exogenous regressors, plus information criteria, AIC
//! grid search and an ARMA simulator.
//!
//! Estimation runs a quasi-Newton optimizer over an unconstrained
//! parameterization: AR/MA coefficients pass through the partial
//! autocorrelation transform (which enforces stationarity and
//! invertibility), the innovation variance is concentrated out
//! analytically, and the exact likelihood comes from a Kalman filter over
//! the ARMA state-space form with stationary initialization. Exogenous
//! regressors follow regression-with-ARIMA-errors semantics: they are
//! differenced alongside the series.

mod kalman;
mod optimize;
mod transform;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::linalg::{qr_least_squares, Mat};
use crate::series::{error_measures, ErrorMeasures, TimeSeries};
use crate::{Error, Result};

use kalman::StateSpace;

/// ARIMA order with drift flag and exogenous regressor names.
#[derive(Debug, Clone, Serialize)]
pub struct ModelSpec {
    pub p: usize,
    pub d: usize,
    pub q: usize,
    pub include_drift: bool,
    pub exog_names: Vec<String>,
}

impl ModelSpec {
    pub fn new(p: usize, d: usize, q: usize) -> Self {
        ModelSpec {
            p,
            d,
            q,
            include_drift: false,
            exog_names: Vec::new(),
        }
    }

    pub fn with_drift(mut self) -> Self {
        self.include_drift = true;
        self
    }

    pub fn with_exog(mut self, names: &[&str]) -> Self {
        self.exog_names = names.iter().map(|s| s.to_string()).collect();
        self
    }

    /// Count of estimated parameters including sigma2.
    pub fn n_params(&self) -> usize {
        self.p + self.q + usize::from(self.include_drift) + self.exog_names.len() + 1
    }

    fn validate(&self) -> Result<()> {
        if self.d > 2 {
            return Err(Error::domain("differencing order d must be <= 2"));
        }
        Ok(())
    }
}

/// Estimated (or hypothesized) parameter values for a [`ModelSpec`].
#[derive(Debug, Clone, Serialize)]
pub struct ParamVector {
    pub phi: Vec<f64>,
    pub theta: Vec<f64>,
    /// Drift: intercept on the differenced scale.
    pub mu: f64,
    /// Exogenous regression coefficients, in `exog_names` order.
    pub beta: Vec<f64>,
    /// Innovation variance (ML estimate when fitted).
    pub sigma2: f64,
}

impl ParamVector {
    fn validate(&self) -> Result<()> {
        if !transform::is_stationary(&self.phi) {
            return Err(Error::domain("AR polynomial is not stationary"));
        }
        if !transform::is_invertible(&self.theta) {
            return Err(Error::domain("MA polynomial is not invertible"));
        }
        if !(self.sigma2 > 0.0) {
            return Err(Error::domain("sigma2 must be positive"));
        }
        Ok(())
    }
}

/// Exogenous regressor matrix: named columns aligned with the endogenous
/// series.
#[derive(Debug, Clone, Default)]
pub struct ExogMatrix {
    pub names: Vec<String>,
    pub columns: Vec<Vec<f64>>,
}

impl ExogMatrix {
    pub fn new(names: Vec<String>, columns: Vec<Vec<f64>>) -> Self {
        ExogMatrix { names, columns }
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }
}

/// A fitted model with its likelihood, information criteria, residuals and
/// in-sample fitted values.
#[derive(Debug, Clone)]
pub struct FittedModel {
    pub spec: ModelSpec,
    pub params: ParamVector,
    pub loglik: f64,
    pub aic: f64,
    /// None when n - k - 1 <= 0 makes the correction undefined.
    pub aicc: Option<f64>,
    pub bic: f64,
    /// One-step prediction errors on the original scale; length equals
    /// `n_obs`.
    pub residuals: TimeSeries,
    /// In-sample one-step fitted values on the original scale.
    pub fitted: TimeSeries,
    /// Observation count after differencing.
    pub n_obs: usize,
    pub converged: bool,
    pub error_measures: ErrorMeasures,
}

/// The three penalized-likelihood criteria.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct InformationCriteria {
    pub aic: f64,
    pub aicc: Option<f64>,
    pub bic: f64,
}

/// AIC/AICc/BIC from a log-likelihood, parameter count k (including
/// sigma2) and sample size n.
pub fn information_criteria_from(loglik: f64, k: usize, n: usize) -> InformationCriteria {
    let kf = k as f64;
    let nf = n as f64;
    let aic = -2.0 * loglik + 2.0 * kf;
    let aicc = if nf - kf - 1.0 > 0.0 {
        Some(aic + 2.0 * kf * (kf + 1.0) / (nf - kf - 1.0))
    } else {
        None
    };
    let bic = -2.0 * loglik + kf * nf.ln();
    InformationCriteria { aic, aicc, bic }
}

/// Recomputes the criteria of a fitted model from its own loglik/k/n.
pub fn information_criteria(m: &FittedModel) -> InformationCriteria {
    information_criteria_from(m.loglik, m.spec.n_params(), m.n_obs)
}

fn difference_vec(values: &[f64], d: usize) -> Vec<f64> {
    let mut v = values.to_vec();
    for _ in 0..d {
        v = v.windows(2).map(|w| w[1] - w[0]).collect();
    }
    v
}

/// Differenced series and differenced exogenous columns for a model.
fn prepare(
    spec: &ModelSpec,
    y: &TimeSeries,
    exog: Option<&ExogMatrix>,
) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    spec.validate()?;
    let levels = y.complete_values()?;
    if levels.len() <= spec.d {
        return Err(Error::domain("series too short for the differencing order"));
    }
    let w = difference_vec(levels, spec.d);
    let mut xcols = Vec::new();
    if let Some(x) = exog {
        if x.columns.len() != spec.exog_names.len() {
            return Err(Error::domain(
                "exogenous matrix width does not match spec.exog_names",
            ));
        }
        for col in &x.columns {
            if col.len() != levels.len() {
                return Err(Error::domain("exogenous column length mismatch"));
            }
            xcols.push(difference_vec(col, spec.d));
        }
    } else if !spec.exog_names.is_empty() {
        return Err(Error::domain("spec names exogenous regressors but no matrix given"));
    }
    Ok((w, xcols))
}

fn adjusted(w: &[f64], xcols: &[Vec<f64>], mu: f64, beta: &[f64]) -> Vec<f64> {
    let mut z = Vec::with_capacity(w.len());
    for t in 0..w.len() {
        let mut v = w[t] - mu;
        for (j, col) in xcols.iter().enumerate() {
            v -= beta[j] * col[t];
        }
        z.push(v);
    }
    z
}

/// Exact Gaussian log-likelihood of `y` under the given spec and
/// parameters (sigma2 fixed, not concentrated).
pub fn loglikelihood(
    spec: &ModelSpec,
    params: &ParamVector,
    y: &TimeSeries,
    exog: Option<&ExogMatrix>,
) -> Result<f64> {
    params.validate()?;
    if params.phi.len() != spec.p || params.theta.len() != spec.q {
        return Err(Error::domain("parameter vector does not match spec orders"));
    }
    let (w, xcols) = prepare(spec, y, exog)?;
    let z = adjusted(&w, &xcols, params.mu, &params.beta);
    let ss = StateSpace::new(&params.phi, &params.theta);
    kalman::loglik_at(&ss, &z, params.sigma2)
}

/// Conditional-sum-of-squares objective used for the optimizer warm start.
fn css_objective(p: usize, q: usize, x: &[f64], z: &[f64]) -> f64 {
    let phi = transform::unconstrained_to_ar(&x[..p]);
    let theta = transform::unconstrained_to_ma(&x[p..p + q]);
    let n = z.len();
    if n <= p {
        return f64::INFINITY;
    }
    let mut e = vec![0.0; n];
    let mut ss = 0.0;
    for t in p..n {
        let mut v = z[t];
        for (i, &ph) in phi.iter().enumerate() {
            v -= ph * z[t - 1 - i];
        }
        for (j, &th) in theta.iter().enumerate() {
            if t > j {
                v -= th * e[t - 1 - j];
            }
        }
        e[t] = v;
        ss += v * v;
    }
    let m = (n - p) as f64;
    if !(ss > 0.0) {
        return f64::INFINITY;
    }
    0.5 * m * (ss / m).ln()
}

struct Objective<'a> {
    p: usize,
    q: usize,
    drift: bool,
    w: &'a [f64],
    xcols: &'a [Vec<f64>],
}

impl Objective<'_> {
    fn split<'b>(&self, x: &'b [f64]) -> (Vec<f64>, Vec<f64>, f64, &'b [f64]) {
        let phi = transform::unconstrained_to_ar(&x[..self.p]);
        let theta = transform::unconstrained_to_ma(&x[self.p..self.p + self.q]);
        let mut idx = self.p + self.q;
        let mu = if self.drift {
            idx += 1;
            x[idx - 1]
        } else {
            0.0
        };
        (phi, theta, mu, &x[idx..])
    }

    /// Negative concentrated log-likelihood.
    fn eval(&self, x: &[f64]) -> f64 {
        let (phi, theta, mu, beta) = self.split(x);
        let z = adjusted(self.w, self.xcols, mu, beta);
        let ss = StateSpace::new(&phi, &theta);
        match kalman::concentrated_loglik(&ss, &z) {
            Ok((ll, _)) => -ll,
            Err(_) => f64::INFINITY,
        }
    }
}

/// Maximum-likelihood fit of an ARIMA model, optionally with drift and
/// exogenous regressors.
pub fn fit(spec: &ModelSpec, y: &TimeSeries, exog: Option<&ExogMatrix>) -> Result<FittedModel> {
    let (w, xcols) = prepare(spec, y, exog)?;
    let n = w.len();
    let k = spec.n_params();
    if n <= k + 5 {
        return Err(Error::domain(format!(
            "{n} observations after differencing are too few for {k} parameters"
        )));
    }
    let mean_w = w.iter().sum::<f64>() / n as f64;
    if w.iter().map(|v| (v - mean_w).powi(2)).sum::<f64>() < 1e-14 {
        return Err(Error::domain("series is constant after differencing"));
    }

    // Linear warm start: OLS of the differenced series on drift/exog.
    let n_lin = usize::from(spec.include_drift) + xcols.len();
    let (mu0, beta0) = if n_lin > 0 && (spec.include_drift || !xcols.is_empty()) {
        let cols = usize::from(spec.include_drift) + xcols.len();
        if cols > 0 {
            let mut design = Mat::zeros(n, cols.max(1));
            for t in 0..n {
                let mut c = 0;
                if spec.include_drift {
                    design.set(t, 0, 1.0);
                    c = 1;
                }
                for (j, col) in xcols.iter().enumerate() {
                    design.set(t, c + j, col[t]);
                }
            }
            let (coef, _, _) = qr_least_squares(&design, &w)
                .map_err(|_| Error::numeric("exogenous regressors are collinear"))?;
            if spec.include_drift {
                (coef[0], coef[1..].to_vec())
            } else {
                (0.0, coef)
            }
        } else {
            (0.0, Vec::new())
        }
    } else {
        (0.0, Vec::new())
    };

    // CSS warm start for the ARMA part on the regression-adjusted series.
    let z0 = adjusted(&w, &xcols, mu0, &beta0);
    let mut arma_start = vec![0.0; spec.p + spec.q];
    if spec.p + spec.q > 0 {
        let css = |x: &[f64]| css_objective(spec.p, spec.q, x, &z0);
        let res = optimize::minimize(&css, &arma_start, 200);
        if res.f.is_finite() {
            arma_start = res.x;
        }
    }

    let mut start = arma_start;
    if spec.include_drift {
        start.push(mu0);
    }
    start.extend_from_slice(&beta0);

    let obj = Objective {
        p: spec.p,
        q: spec.q,
        drift: spec.include_drift,
        w: &w,
        xcols: &xcols,
    };
    let f = |x: &[f64]| obj.eval(x);

    // Exact MLE from the warm start plus three seeded restarts around it.
    let mut best: Option<optimize::MinimizeResult> = None;
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    for restart in 0..4 {
        let x0: Vec<f64> = if restart == 0 {
            start.clone()
        } else {
            start
                .iter()
                .map(|v| v + 0.3 * rng.sample::<f64, _>(StandardNormal))
                .collect()
        };
        let res = optimize::minimize(&f, &x0, 400);
        if res.f.is_finite() {
            let better = best.as_ref().map_or(true, |b| res.f < b.f);
            if better {
                best = Some(res);
            }
        }
    }
    let best = best.ok_or_else(|| Error::numeric("optimizer failed to find a finite likelihood"))?;

    let (phi, theta, mu, beta) = obj.split(&best.x);
    let z = adjusted(&w, &xcols, mu, beta);
    let ss = StateSpace::new(&phi, &theta);
    let (sum_ln_f, sum_v2_f, innovations, _) = kalman::filter(&ss, &z)?;
    let sigma2 = sum_v2_f / n as f64;
    let loglik = -0.5 * n as f64 * (2.0 * std::f64::consts::PI).ln()
        - 0.5 * n as f64 * sigma2.ln()
        - 0.5 * n as f64
        - 0.5 * sum_ln_f;

    let ic = information_criteria_from(loglik, k, n);

    // Residuals are the Kalman innovations; on the original scale the
    // one-step prediction error of y_t equals the prediction error of the
    // d-th difference because earlier levels are known exactly.
    let levels = y.complete_values()?;
    let actual: Vec<f64> = levels[spec.d..].to_vec();
    let fitted_vals: Vec<f64> = actual
        .iter()
        .zip(&innovations)
        .map(|(a, v)| a - v)
        .collect();
    let start_year = y.start_year() + spec.d as i32;
    let residuals = TimeSeries::new(start_year, y.period(), innovations, y.units())?;
    let fitted = TimeSeries::new(start_year, y.period(), fitted_vals, y.units())?;
    let actual_ts = TimeSeries::new(start_year, y.period(), actual, y.units())?;
    let measures = error_measures(&actual_ts, &fitted)?;

    Ok(FittedModel {
        spec: spec.clone(),
        params: ParamVector {
            phi,
            theta,
            mu,
            beta: beta.to_vec(),
            sigma2,
        },
        loglik,
        aic: ic.aic,
        aicc: ic.aicc,
        bic: ic.bic,
        residuals,
        fitted,
        n_obs: n,
        converged: best.converged,
        error_measures: measures,
    })
}

/// Fits every (p, q) in [0, p_max] x [0, q_max] and returns the converged
/// fit with minimal AIC; ties break toward smaller p+q, then smaller q.
///
/// Cells are evaluated in parallel; results are merged in (p, q) order so
/// tie-breaking does not depend on completion order.
pub fn grid_search(
    y: &TimeSeries,
    exog: Option<&ExogMatrix>,
    d: usize,
    p_max: usize,
    q_max: usize,
    drift: bool,
) -> Result<FittedModel> {
    if p_max > 5 || q_max > 5 {
        return Err(Error::domain("grid bounds must be <= 5"));
    }
    let exog_names: Vec<String> = exog.map(|x| x.names.clone()).unwrap_or_default();
    let cells: Vec<(usize, usize)> = (0..=p_max)
        .flat_map(|p| (0..=q_max).map(move |q| (p, q)))
        .collect();
    let results: Vec<((usize, usize), Result<FittedModel>)> = cells
        .par_iter()
        .map(|&(p, q)| {
            let mut spec = ModelSpec::new(p, d, q);
            spec.include_drift = drift;
            spec.exog_names = exog_names.clone();
            ((p, q), fit(&spec, y, exog))
        })
        .collect();

    let mut best: Option<&FittedModel> = None;
    let mut failures = Vec::new();
    for ((p, q), res) in &results {
        match res {
            Ok(m) if m.converged => {
                let better = match best {
                    None => true,
                    Some(b) => {
                        let key_new = (m.aic, m.spec.p + m.spec.q, m.spec.q);
                        let key_old = (b.aic, b.spec.p + b.spec.q, b.spec.q);
                        key_new < key_old
                    }
                };
                if better {
                    best = Some(m);
                }
            }
            Ok(_) => failures.push(format!("({p},{q}): did not converge")),
            Err(e) => failures.push(format!("({p},{q}): {e}")),
        }
    }
    best.cloned()
        .ok_or_else(|| Error::Search(failures.join("; ")))
}

/// Simulates an ARIMA path with Gaussian innovations: an ARMA recursion
/// after a discarded burn-in of max(200, 10(p+q)) samples, drift added on
/// the differenced scale, then cumulative-summed d times. Deterministic
/// for a given seed.
pub fn simulate(spec: &ModelSpec, params: &ParamVector, n: usize, seed: u64) -> Result<TimeSeries> {
    spec.validate()?;
    params.validate()?;
    if params.phi.len() != spec.p || params.theta.len() != spec.q {
        return Err(Error::domain("parameter vector does not match spec orders"));
    }
    let burn = 200.max(10 * (spec.p + spec.q));
    let total = burn + n;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sd = params.sigma2.sqrt();
    let mut eps = vec![0.0; total];
    for e in eps.iter_mut() {
        *e = sd * rng.sample::<f64, _>(StandardNormal);
    }
    let mut w = vec![0.0; total];
    for t in 0..total {
        let mut v = eps[t];
        for (j, &th) in params.theta.iter().enumerate() {
            if t > j {
                v += th * eps[t - 1 - j];
            }
        }
        for (i, &ph) in params.phi.iter().enumerate() {
            if t > i {
                v += ph * w[t - 1 - i];
            }
        }
        w[t] = v;
    }
    let mut out: Vec<f64> = w[burn..].iter().map(|v| v + params.mu).collect();
    for _ in 0..spec.d {
        let mut acc = 0.0;
        for v in out.iter_mut() {
            acc += *v;
            *v = acc;
        }
    }
    TimeSeries::new(2000, crate::series::Period::Annual, out, "sim")
}
