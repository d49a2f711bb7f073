//! Time-series analysis toolkit for studying how large-scale climate
//! oscillations relate to a long regional temperature record.
//!
//! The library covers the full workflow from raw ASCII data products to a
//! reproducible analysis report:
//!
//! * [`ingest`] — parsers for the monthly CET/NAO/PDO table formats and
//!   aggregation to seasonal and annual series.
//! * [`series`] — the core [`series::TimeSeries`] type plus differencing,
//!   standardization, ACF/PACF and training-set error measures.
//! * [`stationarity`] — augmented Dickey-Fuller unit-root test with
//!   tabulated p-value interpolation.
//! * [`arima`] — exact Gaussian maximum-likelihood ARIMA(p,d,q) estimation
//!   with optional drift and exogenous regressors, information criteria,
//!   AIC grid search and an ARMA simulator.
//! * [`diagnostics`] — Ljung-Box portmanteau test and residual reports.
//! * [`spectral`] — smoothed periodogram, cross-spectrum, squared coherence
//!   and F-based significance thresholds.
//! * [`report`] — the deterministic end-to-end pipeline behind the
//!   `teleconnect` CLI.
//!
//! See the book under `book/` for a guided tour; its code snippets are
//! compiled as doc-tests by the `teleconnect-book` crate.

pub mod arima;
pub mod diagnostics;
mod error;
pub mod ingest;
mod linalg;
pub mod report;
pub mod series;
pub mod special;
pub mod spectral;
pub mod stationarity;

pub use error::{Error, Result};
