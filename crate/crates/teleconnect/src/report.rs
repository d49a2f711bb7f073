//! End-to-end pipeline: ingest the three monthly products, run the
//! stationarity/ARIMA/coherence/diagnostics sequence, and emit a
//! deterministic JSON report plus plot-data CSVs.
//!
//! Every number in the report is the value returned by the corresponding
//! library call, rounded to six significant digits at serialization time
//! so regenerated reports are byte-identical.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::arima::{self, ExogMatrix, FittedModel, ModelSpec};
use crate::diagnostics::{self, LjungBoxResult};
use crate::ingest::{self, SeasonConvention, Source};
use crate::series::{self, Period, TimeSeries};
use crate::spectral::{self, Kernel, SpectralEstimate, SpectralOptions};
use crate::stationarity::{self, AdfResult};
use crate::{Error, Result};

/// Rounds to six significant digits; applied to every float that enters
/// the report.
pub fn sig6(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    let mag = x.abs().log10().floor();
    let scale = 10f64.powf(5.0 - mag);
    (x * scale).round() / scale
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OrderConfig {
    pub p: usize,
    pub d: usize,
    pub q: usize,
    #[serde(default)]
    pub drift: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridConfig {
    pub d: usize,
    pub p_max: usize,
    pub q_max: usize,
    pub drift: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectralConfig {
    pub span: usize,
    pub taper: f64,
    pub detrend: bool,
    pub alpha: f64,
    #[serde(default)]
    pub kernel: Kernel,
}

/// Full configuration of a pipeline run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub cet_path: PathBuf,
    pub nao_path: PathBuf,
    pub pdo_path: PathBuf,
    /// Start of the regression window (the coherence analyses always use
    /// the full overlap).
    pub window_start: Option<i32>,
    pub window_end: Option<i32>,
    pub cet_order: OrderConfig,
    pub arimax_order: OrderConfig,
    pub grid: GridConfig,
    pub spectral: SpectralConfig,
    pub winter_uses_prior_december: bool,
    pub ljung_box_lags: usize,
    pub output_dir: PathBuf,
    #[serde(default)]
    pub seed: u64,
}

impl PipelineConfig {
    /// Defaults matching the bundled datasets under `fixtures/`.
    pub fn with_fixture_dir(dir: &Path, output_dir: &Path) -> Self {
        PipelineConfig {
            cet_path: dir.join("cet_monthly.txt"),
            nao_path: dir.join("nao_monthly.txt"),
            pdo_path: dir.join("pdo_monthly.txt"),
            window_start: Some(1951),
            window_end: None,
            cet_order: OrderConfig {
                p: 2,
                d: 1,
                q: 1,
                drift: false,
            },
            arimax_order: OrderConfig {
                p: 0,
                d: 1,
                q: 1,
                drift: true,
            },
            grid: GridConfig {
                d: 1,
                p_max: 3,
                q_max: 3,
                drift: true,
            },
            spectral: SpectralConfig {
                span: 9,
                taper: 0.1,
                detrend: true,
                alpha: 0.01,
                kernel: Kernel::Daniell,
            },
            winter_uses_prior_december: true,
            ljung_box_lags: 10,
            output_dir: output_dir.to_path_buf(),
            seed: 0,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.spectral.span % 2 == 0 || self.spectral.span < 3 {
            return Err(Error::Usage("spectral span must be odd and >= 3".into()));
        }
        if !(0.0 < self.spectral.alpha && self.spectral.alpha < 0.5) {
            return Err(Error::Usage("alpha must be in (0, 0.5)".into()));
        }
        if let (Some(s), Some(e)) = (self.window_start, self.window_end) {
            if s > e {
                return Err(Error::Usage("window start exceeds window end".into()));
            }
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------
// Report blocks
// ---------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct Provenance {
    pub toolkit_version: String,
    pub config_sha256: String,
    pub input_sha256: Vec<FileChecksum>,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct FileChecksum {
    pub name: String,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct DatasetSummary {
    pub name: String,
    pub first_year: i32,
    pub last_year: i32,
    pub complete_years: usize,
    pub annual_mean: f64,
    pub annual_sd: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct AdfEntry {
    pub series: String,
    pub differenced: bool,
    pub statistic: f64,
    pub lag_order: usize,
    pub p_value: f64,
    pub clamped: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct Coefficient {
    pub name: String,
    pub estimate: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct FitBlock {
    pub order: OrderConfig,
    pub exog: Vec<String>,
    pub n_obs: usize,
    pub coefficients: Vec<Coefficient>,
    pub sigma2: f64,
    pub loglik: f64,
    pub aic: f64,
    pub aicc: Option<f64>,
    pub bic: f64,
    pub me: f64,
    pub rmse: f64,
    pub mae: f64,
    pub mape: Option<f64>,
    pub acf1: f64,
    pub converged: bool,
}

impl FitBlock {
    /// Canonical JSON view of a fitted model.
    pub fn from_model(m: &FittedModel) -> Self {
        let mut coefficients = Vec::new();
        for (i, v) in m.params.phi.iter().enumerate() {
            coefficients.push(Coefficient {
                name: format!("ar{}", i + 1),
                estimate: sig6(*v),
            });
        }
        for (i, v) in m.params.theta.iter().enumerate() {
            coefficients.push(Coefficient {
                name: format!("ma{}", i + 1),
                estimate: sig6(*v),
            });
        }
        if m.spec.include_drift {
            coefficients.push(Coefficient {
                name: "drift".to_string(),
                estimate: sig6(m.params.mu),
            });
        }
        for (name, v) in m.spec.exog_names.iter().zip(&m.params.beta) {
            coefficients.push(Coefficient {
                name: name.clone(),
                estimate: sig6(*v),
            });
        }
        FitBlock {
            order: OrderConfig {
                p: m.spec.p,
                d: m.spec.d,
                q: m.spec.q,
                drift: m.spec.include_drift,
            },
            exog: m.spec.exog_names.clone(),
            n_obs: m.n_obs,
            coefficients,
            sigma2: sig6(m.params.sigma2),
            loglik: sig6(m.loglik),
            aic: sig6(m.aic),
            aicc: m.aicc.map(sig6),
            bic: sig6(m.bic),
            me: sig6(m.error_measures.me),
            rmse: sig6(m.error_measures.rmse),
            mae: sig6(m.error_measures.mae),
            mape: m.error_measures.mape.map(sig6),
            acf1: sig6(m.error_measures.acf1),
            converged: m.converged,
        }
    }

    /// Named coefficient lookup for checks.
    pub fn coefficient(&self, name: &str) -> Option<f64> {
        self.coefficients
            .iter()
            .find(|c| c.name == name)
            .map(|c| c.estimate)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct LjungBoxEntry {
    pub model: String,
    pub q_star: f64,
    pub lags: usize,
    pub fitdf: usize,
    pub df: usize,
    pub p_value: f64,
}

impl LjungBoxEntry {
    fn new(model: &str, lb: &LjungBoxResult) -> Self {
        LjungBoxEntry {
            model: model.to_string(),
            q_star: sig6(lb.q_star),
            lags: lb.lags,
            fitdf: lb.fitdf,
            df: lb.df,
            p_value: sig6(lb.p_value),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BandBlock {
    pub lo: f64,
    pub hi: f64,
    pub period_lo: f64,
    pub period_hi: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CoherenceBlock {
    pub pair: String,
    /// Differenced sample count entering the spectral estimate.
    pub n: usize,
    pub span: usize,
    pub kernel: Kernel,
    pub df: f64,
    pub f_crit: f64,
    pub threshold_c: f64,
    pub alpha: f64,
    pub bands: Vec<BandBlock>,
    pub peak_frequency: f64,
    pub peak_coherence: f64,
    pub window_years: (i32, i32),
    pub dropped_years: Vec<i32>,
}

#[derive(Debug, Clone, Serialize)]
pub struct GridBlock {
    pub d: usize,
    pub p_max: usize,
    pub q_max: usize,
    pub drift: bool,
    pub selected_p: usize,
    pub selected_q: usize,
    pub aic: f64,
}

/// The full analysis report.
#[derive(Debug, Clone, Serialize)]
pub struct AnalysisReport {
    pub provenance: Provenance,
    pub datasets: Vec<DatasetSummary>,
    pub adf: Vec<AdfEntry>,
    pub cet_arima: FitBlock,
    pub ljung_box: Vec<LjungBoxEntry>,
    pub coherence_nao: CoherenceBlock,
    pub coherence_pdo: CoherenceBlock,
    pub grid_selection: GridBlock,
    pub arimax: FitBlock,
}

/// Report plus the intermediate series needed to emit figure data.
pub struct PipelineRun {
    pub report: AnalysisReport,
    pub config: PipelineConfig,
    cet_table: ingest::RawTable,
    nao_table: ingest::RawTable,
    pdo_table: ingest::RawTable,
    cet_annual: TimeSeries,
    nao_annual: TimeSeries,
    pdo_annual: TimeSeries,
    cet_fit: FittedModel,
    nao_estimate: SpectralEstimate,
    pdo_estimate: SpectralEstimate,
    nao_threshold: spectral::CoherenceThreshold,
    pdo_threshold: spectral::CoherenceThreshold,
}

fn stage<T>(name: &'static str, r: Result<T>) -> Result<T> {
    r.map_err(|e| e.in_stage(name))
}

fn dataset_summary(name: &str, annual: &TimeSeries) -> DatasetSummary {
    let mut vals = Vec::new();
    for i in 0..annual.len() {
        if let Some(v) = annual.get(i) {
            vals.push(v);
        }
    }
    let n = vals.len();
    let mean = vals.iter().sum::<f64>() / n as f64;
    let sd = (vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0)).sqrt();
    DatasetSummary {
        name: name.to_string(),
        first_year: annual.start_year(),
        last_year: annual.start_year() + annual.len() as i32 - 1,
        complete_years: n,
        annual_mean: sig6(mean),
        annual_sd: sig6(sd),
    }
}

fn adf_entry(series: &str, differenced: bool, r: &AdfResult) -> AdfEntry {
    AdfEntry {
        series: series.to_string(),
        differenced,
        statistic: sig6(r.statistic),
        lag_order: r.lag_order,
        p_value: sig6(r.p_value),
        clamped: r.clamp != stationarity::Clamp::None,
    }
}

fn coherence_analysis(
    pair: &str,
    x_annual: &TimeSeries,
    y_annual: &TimeSeries,
    cfg: &SpectralConfig,
) -> Result<(CoherenceBlock, SpectralEstimate, spectral::CoherenceThreshold)> {
    // Full overlap of the two series, rows with missing values dropped.
    let aligned = ingest::align(&[x_annual, y_annual], None, None)?;
    let x = aligned.column_series(0, x_annual.units())?;
    let y = aligned.column_series(1, y_annual.units())?;
    // Both series are first-differenced before spectral analysis.
    let dx = series::difference(&x, 1)?;
    let dy = series::difference(&y, 1)?;
    let opts = SpectralOptions {
        span: cfg.span,
        detrend: cfg.detrend,
        taper: cfg.taper,
        kernel: cfg.kernel,
    };
    let est = spectral::periodogram_pair_with(&dx, &dy, &opts)?;
    let thr = spectral::coherence_threshold(est.n, cfg.span, cfg.alpha)?;
    let bands = spectral::significant_bands(&est, &thr)?;
    let (peak_f, peak_c) = spectral::peak_coherence(&est);
    let block = CoherenceBlock {
        pair: pair.to_string(),
        n: est.n,
        span: cfg.span,
        kernel: cfg.kernel,
        df: sig6(thr.df),
        f_crit: sig6(thr.f_crit),
        threshold_c: sig6(thr.c),
        alpha: cfg.alpha,
        bands: bands
            .iter()
            .map(|b| BandBlock {
                lo: sig6(b.lo),
                hi: sig6(b.hi),
                period_lo: sig6(b.period_lo),
                period_hi: sig6(b.period_hi),
            })
            .collect(),
        peak_frequency: sig6(peak_f),
        peak_coherence: sig6(peak_c),
        window_years: (aligned.years[0], *aligned.years.last().unwrap()),
        dropped_years: aligned.dropped_years.clone(),
    };
    Ok((block, est, thr))
}

fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let digest = hasher.finalize();
    let mut out = String::with_capacity(64);
    for b in digest {
        out.push_str(&format!("{b:02x}"));
    }
    out
}

/// Executes the full pipeline and writes the report and plot CSVs to the
/// configured output directory.
pub fn run_pipeline(config: &PipelineConfig) -> Result<PipelineRun> {
    let run = compute_pipeline(config)?;
    stage("emit", write_outputs(&run))?;
    Ok(run)
}

/// Executes the full pipeline without touching the filesystem for output.
pub fn compute_pipeline(config: &PipelineConfig) -> Result<PipelineRun> {
    config.validate().map_err(|e| e.in_stage("config"))?;

    // Ingest.
    let read = |p: &Path| -> Result<String> { Ok(fs::read_to_string(p)?) };
    let cet_text = stage("ingest", read(&config.cet_path))?;
    let nao_text = stage("ingest", read(&config.nao_path))?;
    let pdo_text = stage("ingest", read(&config.pdo_path))?;
    let cet_table = stage("ingest", ingest::parse_table(&cet_text, Source::CetMonthly))?;
    let nao_table = stage("ingest", ingest::parse_table(&nao_text, Source::NaoMonthly))?;
    let pdo_table = stage("ingest", ingest::parse_table(&pdo_text, Source::PdoMonthly))?;
    let cet_annual = stage("aggregate", ingest::to_annual(&cet_table))?;
    let nao_annual = stage("aggregate", ingest::to_annual(&nao_table))?;
    let pdo_annual = stage("aggregate", ingest::to_annual(&pdo_table))?;

    let datasets = vec![
        dataset_summary("cet", &cet_annual),
        dataset_summary("nao", &nao_annual),
        dataset_summary("pdo", &pdo_annual),
    ];

    // Stationarity testing on the raw and differenced annual series.
    let cet_complete = stage("adf", cet_annual.trim_missing())?;
    let nao_complete = stage("adf", nao_annual.trim_missing())?;
    let pdo_complete = stage("adf", pdo_annual.trim_missing())?;
    let mut adf = Vec::new();
    for (name, s) in [
        ("cet", &cet_complete),
        ("nao", &nao_complete),
        ("pdo", &pdo_complete),
    ] {
        let raw = stage("adf", stationarity::adf_test(s, None))?;
        adf.push(adf_entry(name, false, &raw));
        let diff = stage("adf", series::difference(s, 1))?;
        let diffed = stage("adf", stationarity::adf_test(&diff, None))?;
        adf.push(adf_entry(name, true, &diffed));
    }

    // ARIMA on the annual temperature series.
    let mut cet_spec = ModelSpec::new(
        config.cet_order.p,
        config.cet_order.d,
        config.cet_order.q,
    );
    if config.cet_order.drift {
        cet_spec.include_drift = true;
    }
    let cet_fit = stage("cet_arima", arima::fit(&cet_spec, &cet_complete, None))?;
    let lb_arima = stage(
        "diagnostics",
        diagnostics::ljung_box(
            &cet_fit.residuals,
            config.ljung_box_lags,
            cet_spec.p + cet_spec.q,
        ),
    )?;

    // Coherence of the differenced aligned annual pairs.
    let (nao_block, nao_estimate, nao_threshold) = stage(
        "coherence",
        coherence_analysis("cet_nao", &cet_annual, &nao_annual, &config.spectral),
    )?;
    let (pdo_block, pdo_estimate, pdo_threshold) = stage(
        "coherence",
        coherence_analysis("cet_pdo", &cet_annual, &pdo_annual, &config.spectral),
    )?;

    // Regression window: CET with the two oscillation indices.
    let aligned = stage(
        "align",
        ingest::align(
            &[&cet_annual, &pdo_annual, &nao_annual],
            config.window_start,
            config.window_end,
        ),
    )?;
    let y = stage("align", aligned.column_series(0, cet_annual.units()))?;
    let exog = ExogMatrix::new(
        vec!["pdo".to_string(), "nao".to_string()],
        vec![aligned.columns[1].clone(), aligned.columns[2].clone()],
    );

    let grid_fit = stage(
        "gridsearch",
        arima::grid_search(
            &y,
            Some(&exog),
            config.grid.d,
            config.grid.p_max,
            config.grid.q_max,
            config.grid.drift,
        ),
    )?;
    let grid_selection = GridBlock {
        d: config.grid.d,
        p_max: config.grid.p_max,
        q_max: config.grid.q_max,
        drift: config.grid.drift,
        selected_p: grid_fit.spec.p,
        selected_q: grid_fit.spec.q,
        aic: sig6(grid_fit.aic),
    };

    let mut ax_spec = ModelSpec::new(
        config.arimax_order.p,
        config.arimax_order.d,
        config.arimax_order.q,
    )
    .with_exog(&["pdo", "nao"]);
    if config.arimax_order.drift {
        ax_spec.include_drift = true;
    }
    let arimax_fit = stage("arimax", arima::fit(&ax_spec, &y, Some(&exog)))?;
    let lb_arimax = stage(
        "diagnostics",
        diagnostics::ljung_box(
            &arimax_fit.residuals,
            config.ljung_box_lags,
            ax_spec.p + ax_spec.q,
        ),
    )?;

    let provenance = Provenance {
        toolkit_version: env!("CARGO_PKG_VERSION").to_string(),
        config_sha256: sha256_hex(serde_json::to_string(config)?.as_bytes()),
        input_sha256: vec![
            FileChecksum {
                name: "cet".into(),
                sha256: sha256_hex(cet_text.as_bytes()),
            },
            FileChecksum {
                name: "nao".into(),
                sha256: sha256_hex(nao_text.as_bytes()),
            },
            FileChecksum {
                name: "pdo".into(),
                sha256: sha256_hex(pdo_text.as_bytes()),
            },
        ],
        seed: config.seed,
    };

    let report = AnalysisReport {
        provenance,
        datasets,
        adf,
        cet_arima: FitBlock::from_model(&cet_fit),
        ljung_box: vec![
            LjungBoxEntry::new("cet_arima", &lb_arima),
            LjungBoxEntry::new("arimax", &lb_arimax),
        ],
        coherence_nao: nao_block,
        coherence_pdo: pdo_block,
        grid_selection,
        arimax: FitBlock::from_model(&arimax_fit),
    };

    Ok(PipelineRun {
        report,
        config: config.clone(),
        cet_table,
        nao_table,
        pdo_table,
        cet_annual,
        nao_annual,
        pdo_annual,
        cet_fit,
        nao_estimate,
        pdo_estimate,
        nao_threshold,
        pdo_threshold,
    })
}

/// Serializes the report as pretty JSON with a trailing newline.
pub fn report_json(report: &AnalysisReport) -> Result<String> {
    let mut s = serde_json::to_string_pretty(report)?;
    s.push('\n');
    Ok(s)
}

fn write_outputs(run: &PipelineRun) -> Result<()> {
    let dir = &run.config.output_dir;
    fs::create_dir_all(dir)?;
    let mut written: Vec<PathBuf> = Vec::new();
    let result = (|| -> Result<()> {
        let report_path = dir.join("report.json");
        fs::write(&report_path, report_json(&run.report)?)?;
        written.push(report_path);
        for figure in Figure::ALL {
            let files = emit_figure_data(run, figure, dir, false)?;
            written.extend(files);
        }
        Ok(())
    })();
    if result.is_err() {
        for f in &written {
            let _ = fs::remove_file(f);
        }
    }
    result
}

/// Figure identifiers for the plot-data bundle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Figure {
    F1,
    F2,
    F3,
    F4,
    F5,
    F6,
}

impl Figure {
    pub const ALL: [Figure; 6] = [
        Figure::F1,
        Figure::F2,
        Figure::F3,
        Figure::F4,
        Figure::F5,
        Figure::F6,
    ];
}

impl std::str::FromStr for Figure {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "F1" => Ok(Figure::F1),
            "F2" => Ok(Figure::F2),
            "F3" => Ok(Figure::F3),
            "F4" => Ok(Figure::F4),
            "F5" => Ok(Figure::F5),
            "F6" => Ok(Figure::F6),
            other => Err(Error::Usage(format!("unknown figure id '{other}'"))),
        }
    }
}

fn write_file(dir: &Path, name: &str, contents: &str, out: &mut Vec<PathBuf>) -> Result<()> {
    let path = dir.join(name);
    fs::write(&path, contents)?;
    out.push(path);
    Ok(())
}

/// Per-frequency CSV with the threshold repeated in the last column.
pub fn coherence_csv(est: &SpectralEstimate, c: f64) -> String {
    let mut s = String::from("freq,f_xx,f_yy,re_f_xy,im_f_xy,coherence,threshold\n");
    for i in 0..est.freqs.len() {
        s.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            sig6(est.freqs[i]),
            sig6(est.f_xx[i]),
            sig6(est.f_yy[i]),
            sig6(est.f_xy[i].re),
            sig6(est.f_xy[i].im),
            sig6(est.coherence[i]),
            sig6(c),
        ));
    }
    s
}

/// Writes the plot-data files for one figure; returns the paths written.
/// With `svg` set, also renders a minimal polyline chart per CSV.
pub fn emit_figure_data(
    run: &PipelineRun,
    figure: Figure,
    dir: &Path,
    svg: bool,
) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut files = Vec::new();
    match figure {
        Figure::F1 => {
            write_file(dir, "f1_cet_annual.csv", &run.cet_annual.to_csv(), &mut files)?;
            write_file(dir, "f1_nao_annual.csv", &run.nao_annual.to_csv(), &mut files)?;
            write_file(dir, "f1_pdo_annual.csv", &run.pdo_annual.to_csv(), &mut files)?;
            // Standardized over the common complete window.
            let aligned = ingest::align(
                &[&run.cet_annual, &run.nao_annual, &run.pdo_annual],
                None,
                None,
            )?;
            let mut s = String::from("year,cet_std,nao_std,pdo_std\n");
            let std_cols: Vec<Vec<f64>> = (0..3)
                .map(|i| {
                    let col = aligned.column_series(i, "x")?;
                    Ok(series::standardize(&col)?.raw_values().to_vec())
                })
                .collect::<Result<_>>()?;
            for (r, year) in aligned.years.iter().enumerate() {
                s.push_str(&format!(
                    "{},{},{},{}\n",
                    year,
                    sig6(std_cols[0][r]),
                    sig6(std_cols[1][r]),
                    sig6(std_cols[2][r])
                ));
            }
            write_file(dir, "f1_standardized.csv", &s, &mut files)?;
        }
        Figure::F2 => {
            let conv = SeasonConvention {
                winter_uses_prior_december: run.config.winter_uses_prior_december,
            };
            for (name, table) in [
                ("cet", &run.cet_table),
                ("nao", &run.nao_table),
                ("pdo", &run.pdo_table),
            ] {
                let annual = ingest::to_annual(table)?;
                let seasons = ingest::to_seasonal(table, &conv)?;
                let mut s = String::from("year,spring,summer,autumn,winter,annual\n");
                for i in 0..annual.len() {
                    let cell = |v: Option<f64>| v.map(|x| sig6(x).to_string()).unwrap_or_default();
                    s.push_str(&format!(
                        "{},{},{},{},{},{}\n",
                        annual.start_year() + i as i32,
                        cell(seasons[0].get(i)),
                        cell(seasons[1].get(i)),
                        cell(seasons[2].get(i)),
                        cell(seasons[3].get(i)),
                        cell(annual.get(i)),
                    ));
                }
                write_file(dir, &format!("f2_{name}_seasonal.csv"), &s, &mut files)?;
            }
        }
        Figure::F3 => {
            let cet = run.cet_annual.trim_missing()?;
            let max_lag = 25usize;
            let raw_acf = series::acf(&cet, max_lag)?;
            let raw_pacf = series::pacf(&cet, max_lag)?;
            let diff = series::difference(&cet, 1)?;
            let d_acf = series::acf(&diff, max_lag)?;
            let d_pacf = series::pacf(&diff, max_lag)?;
            let mut s = String::from("lag,acf_raw,pacf_raw,acf_diff,pacf_diff,bound_raw,bound_diff\n");
            for k in 0..=max_lag {
                s.push_str(&format!(
                    "{},{},{},{},{},{},{}\n",
                    k,
                    sig6(raw_acf.values[k]),
                    sig6(raw_pacf.values[k]),
                    sig6(d_acf.values[k]),
                    sig6(d_pacf.values[k]),
                    sig6(raw_acf.confidence_bound),
                    sig6(d_acf.confidence_bound),
                ));
            }
            write_file(dir, "f3_correlograms.csv", &s, &mut files)?;
        }
        Figure::F4 => {
            let rep = diagnostics::residual_report(&run.cet_fit.residuals, 20)?;
            write_file(dir, "f4_residuals.csv", &run.cet_fit.residuals.to_csv(), &mut files)?;
            let mut s = String::from("lag,acf,bound\n");
            for k in 0..=rep.acf.max_lag {
                s.push_str(&format!(
                    "{},{},{}\n",
                    k,
                    sig6(rep.acf.values[k]),
                    sig6(rep.acf.confidence_bound)
                ));
            }
            write_file(dir, "f4_residual_acf.csv", &s, &mut files)?;
            let mut s = String::from("bin_lo,bin_hi,count\n");
            for (i, c) in rep.histogram.counts.iter().enumerate() {
                s.push_str(&format!(
                    "{},{},{}\n",
                    sig6(rep.histogram.edges[i]),
                    sig6(rep.histogram.edges[i + 1]),
                    c
                ));
            }
            write_file(dir, "f4_residual_hist.csv", &s, &mut files)?;
            let mut s = String::from("x,density\n");
            for (x, d) in &rep.density {
                s.push_str(&format!("{},{}\n", sig6(*x), sig6(*d)));
            }
            write_file(dir, "f4_residual_density.csv", &s, &mut files)?;
        }
        Figure::F5 => {
            let csv = coherence_csv(&run.nao_estimate, run.nao_threshold.c);
            write_file(dir, "f5_coherence_cet_nao.csv", &csv, &mut files)?;
        }
        Figure::F6 => {
            let csv = coherence_csv(&run.pdo_estimate, run.pdo_threshold.c);
            write_file(dir, "f6_coherence_cet_pdo.csv", &csv, &mut files)?;
        }
    }
    if svg {
        let csv_files: Vec<PathBuf> = files
            .iter()
            .filter(|f| f.extension().is_some_and(|e| e == "csv"))
            .cloned()
            .collect();
        for csv in csv_files {
            let svg_path = csv.with_extension("svg");
            let contents = fs::read_to_string(&csv)?;
            fs::write(&svg_path, render_svg(&contents))?;
            files.push(svg_path);
        }
    }
    Ok(files)
}

/// Minimal polyline chart of the numeric columns of a CSV, row index on
/// the horizontal axis.
fn render_svg(csv: &str) -> String {
    const W: f64 = 720.0;
    const H: f64 = 360.0;
    const PAD: f64 = 30.0;
    let mut rows: Vec<Vec<Option<f64>>> = Vec::new();
    for line in csv.lines().skip(1) {
        rows.push(line.split(',').map(|c| c.parse::<f64>().ok()).collect());
    }
    let n_cols = rows.iter().map(|r| r.len()).max().unwrap_or(0);
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for r in &rows {
        for v in r.iter().skip(1).flatten() {
            lo = lo.min(*v);
            hi = hi.max(*v);
        }
    }
    if !lo.is_finite() || !hi.is_finite() || lo == hi {
        lo = 0.0;
        hi = 1.0;
    }
    let colors = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#8c564b", "#e377c2"];
    let mut svg = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\">\n<rect width=\"{W}\" height=\"{H}\" fill=\"white\"/>\n"
    );
    svg.push_str(&format!(
        "<line x1=\"{PAD}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n<line x1=\"{PAD}\" y1=\"{PAD}\" x2=\"{PAD}\" y2=\"{}\" stroke=\"black\"/>\n",
        H - PAD,
        W - PAD,
        H - PAD,
        H - PAD
    ));
    let x_of = |i: usize, n: usize| PAD + (W - 2.0 * PAD) * i as f64 / (n.max(2) - 1) as f64;
    let y_of = |v: f64| H - PAD - (H - 2.0 * PAD) * (v - lo) / (hi - lo);
    for col in 1..n_cols {
        let mut points = String::new();
        for (i, r) in rows.iter().enumerate() {
            if let Some(Some(v)) = r.get(col) {
                points.push_str(&format!("{:.2},{:.2} ", x_of(i, rows.len()), y_of(*v)));
            }
        }
        if !points.is_empty() {
            svg.push_str(&format!(
                "<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"1.2\" points=\"{}\"/>\n",
                colors[(col - 1) % colors.len()],
                points.trim_end()
            ));
        }
    }
    svg.push_str("</svg>\n");
    svg
}

// ---------------------------------------------------------------------
// Reference expectations for the bundled datasets
// ---------------------------------------------------------------------

/// One verification row produced by `run --check`.
#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub name: &'static str,
    pub observed: f64,
    pub target: f64,
    pub tolerance: f64,
    pub pass: bool,
}

fn check(name: &'static str, observed: f64, target: f64, tolerance: f64) -> CheckResult {
    CheckResult {
        name,
        observed,
        target,
        tolerance,
        pass: (observed - target).abs() <= tolerance,
    }
}

/// Compares a report against the validated reference statistics for the
/// bundled datasets. Each entry reports observed vs target.
pub fn reference_checks(report: &AnalysisReport) -> Vec<CheckResult> {
    let mut out = Vec::new();
    let adf_p = |series: &str| {
        report
            .adf
            .iter()
            .find(|e| e.series == series && !e.differenced)
            .map(|e| e.p_value)
            .unwrap_or(f64::NAN)
    };
    out.push(check("adf_cet_p", adf_p("cet"), 0.08158, 0.03));
    out.push(check("adf_nao_p", adf_p("nao"), 0.244, 0.03));
    out.push(check("adf_pdo_p", adf_p("pdo"), 0.01035, 0.03));

    let a = &report.cet_arima;
    let coef = |b: &FitBlock, n: &str| b.coefficient(n).unwrap_or(f64::NAN);
    out.push(check("arima_ar1", coef(a, "ar1"), 0.1108, 0.02));
    out.push(check("arima_ar2", coef(a, "ar2"), 0.1676, 0.02));
    out.push(check("arima_ma1", coef(a, "ma1"), -0.9309, 0.02));
    out.push(check("arima_sigma2", a.sigma2, 0.3396, 0.02));
    out.push(check("arima_loglik", a.loglik, -262.03, 1.0));
    out.push(check("arima_aic", a.aic, 532.07, 2.0));
    out.push(check("arima_aicc", a.aicc.unwrap_or(f64::NAN), 532.2, 2.0));
    out.push(check("arima_bic", a.bic, 546.87, 2.0));
    out.push(check("arima_me", a.me, 0.0372, 0.02));
    out.push(check("arima_rmse", a.rmse, 0.5788, 0.02));
    out.push(check("arima_mae", a.mae, 0.45, 0.02));
    out.push(check("arima_mape", a.mape.unwrap_or(f64::NAN), 4.86, 0.3));
    out.push(check("arima_acf1", a.acf1, 0.00057, 0.05));

    let lb = |model: &str| report.ljung_box.iter().find(|e| e.model == model);
    if let Some(e) = lb("cet_arima") {
        out.push(check("ljung_box_arima_q", e.q_star, 4.9507, 0.5));
        out.push(check("ljung_box_arima_df", e.df as f64, 7.0, 0.0));
        out.push(check("ljung_box_arima_p", e.p_value, 0.666, 0.05));
    }
    if let Some(e) = lb("arimax") {
        out.push(check("ljung_box_arimax_q", e.q_star, 13.881, 0.5));
        out.push(check("ljung_box_arimax_df", e.df as f64, 9.0, 0.0));
        out.push(check("ljung_box_arimax_p", e.p_value, 0.1266, 0.05));
    }

    let x = &report.arimax;
    out.push(check("arimax_ma1", coef(x, "ma1"), -0.8248, 0.03));
    out.push(check("arimax_drift", coef(x, "drift"), 0.0207, 0.03));
    out.push(check("arimax_beta_pdo", coef(x, "pdo"), 0.0128, 0.03));
    out.push(check("arimax_beta_nao", coef(x, "nao"), 0.2835, 0.03));
    out.push(check("arimax_sigma2", x.sigma2, 0.2444, 0.02));
    out.push(check("arimax_loglik", x.loglik, -49.96, 1.0));
    out.push(check("arimax_aic", x.aic, 109.92, 2.0));
    out.push(check("arimax_aicc", x.aicc.unwrap_or(f64::NAN), 110.83, 2.0));
    out.push(check("arimax_bic", x.bic, 121.3, 2.0));
    out.push(check(
        "grid_selects_p0",
        report.grid_selection.selected_p as f64,
        0.0,
        0.0,
    ));
    out.push(check(
        "grid_selects_q1",
        report.grid_selection.selected_q as f64,
        1.0,
        0.0,
    ));

    out.push(check(
        "coherence_nao_c",
        report.coherence_nao.threshold_c,
        0.2606,
        0.01,
    ));
    out.push(check(
        "coherence_pdo_c",
        report.coherence_pdo.threshold_c,
        0.2579,
        0.02,
    ));

    // Band locations with one-Fourier-bin edge tolerance.
    let bin_nao = 1.0 / report.coherence_nao.n as f64;
    let nao_bands = &report.coherence_nao.bands;
    let low = nao_bands
        .iter()
        .find(|b| (b.lo - 0.133).abs() <= bin_nao && (b.hi - 0.2).abs() <= bin_nao);
    let high = nao_bands
        .iter()
        .find(|b| (b.lo - 0.427).abs() <= bin_nao && (b.hi - 0.493).abs() <= bin_nao);
    out.push(check(
        "coherence_nao_low_band_lo",
        low.map(|b| b.lo).unwrap_or(f64::NAN),
        0.133,
        bin_nao,
    ));
    out.push(check(
        "coherence_nao_low_band_hi",
        low.map(|b| b.hi).unwrap_or(f64::NAN),
        0.2,
        bin_nao,
    ));
    out.push(check(
        "coherence_nao_high_band_lo",
        high.map(|b| b.lo).unwrap_or(f64::NAN),
        0.427,
        bin_nao,
    ));
    out.push(check(
        "coherence_nao_high_band_hi",
        high.map(|b| b.hi).unwrap_or(f64::NAN),
        0.493,
        bin_nao,
    ));
    out.push(check(
        "coherence_nao_peak_freq",
        report.coherence_nao.peak_frequency,
        0.15,
        bin_nao,
    ));
    out.push(check(
        "coherence_pdo_band_count",
        report.coherence_pdo.bands.len() as f64,
        0.0,
        0.0,
    ));
    out
}

/// Reads a two-column (time,value) CSV written by [`TimeSeries::to_csv`].
pub fn read_series_csv(path: &Path) -> Result<TimeSeries> {
    let text = fs::read_to_string(path)?;
    let mut values: Vec<Option<f64>> = Vec::new();
    let mut start_year: Option<i32> = None;
    let mut period = Period::Annual;
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if idx == 0 || line.is_empty() {
            continue;
        }
        let (label, value) = line.split_once(',').ok_or(Error::Parse {
            line: idx + 1,
            message: "expected 'time,value'".to_string(),
        })?;
        let (year_part, sub) = if let Some((y, m)) = label.split_once('-') {
            period = Period::Monthly;
            (y, m.parse::<u32>().ok().map(|v| v - 1))
        } else if let Some((y, q)) = label.split_once('Q') {
            period = Period::Seasonal;
            (y, q.parse::<u32>().ok().map(|v| v - 1))
        } else {
            (label, Some(0))
        };
        let year: i32 = year_part.trim().parse().map_err(|_| Error::Parse {
            line: idx + 1,
            message: format!("invalid time label '{label}'"),
        })?;
        if start_year.is_none() {
            if sub != Some(0) {
                return Err(Error::Parse {
                    line: idx + 1,
                    message: "series must start at the first sub-period".to_string(),
                });
            }
            start_year = Some(year);
        }
        if value.trim().is_empty() {
            values.push(None);
        } else {
            let v: f64 = value.trim().parse().map_err(|_| Error::Parse {
                line: idx + 1,
                message: format!("invalid value '{value}'"),
            })?;
            values.push(Some(v));
        }
    }
    let start = start_year.ok_or_else(|| Error::Structural("empty series CSV".to_string()))?;
    TimeSeries::with_missing(start, period, values, "value")
}
