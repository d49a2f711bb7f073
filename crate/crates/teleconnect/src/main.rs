//! `teleconnect` — CLI over the analysis pipeline.
//!
//! Exit codes: 0 success, 2 usage, 3 parse/data, 4 numeric, 5 reference
//! check failure in `run --check`.

use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};

use teleconnect::arima::{self, ExogMatrix, ModelSpec};
use teleconnect::diagnostics;
use teleconnect::report::{
    self, emit_figure_data, read_series_csv, reference_checks, Figure,
    PipelineConfig,
};
use teleconnect::series;
use teleconnect::spectral::{self, Kernel, SpectralOptions};
use teleconnect::stationarity::{self, Regression};
use teleconnect::{Error, Result};

#[derive(Parser)]
#[command(name = "teleconnect", version, about = "Climate teleconnection time-series toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full analysis pipeline from a config file.
    Run(RunArgs),
    /// Augmented Dickey-Fuller unit-root test on a series CSV.
    Adf(AdfArgs),
    /// Fit an ARIMA model to a series CSV.
    Fit(FitArgs),
    /// AIC grid search over ARIMA orders.
    Gridsearch(GridArgs),
    /// Smoothed cross-spectral coherence for a pair of series.
    Coherence(CoherenceArgs),
    /// Ljung-Box test and residual diagnostics for a residual series.
    Diagnose(DiagnoseArgs),
    /// Emit plot-data files for one figure of the report bundle.
    Figure(FigureArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Pipeline configuration JSON.
    #[arg(long)]
    config: PathBuf,
    /// Verify the report against the reference expectations for the
    /// bundled datasets; exits 5 on any failure.
    #[arg(long)]
    check: bool,
    /// Override the configured output directory (also via the
    /// TELECONNECT_OUTPUT_DIR environment variable).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed recorded in the report provenance for simulation-backed
    /// tooling.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct AdfArgs {
    /// Two-column (time,value) series CSV.
    #[arg(long)]
    input: PathBuf,
    /// Lagged-difference order; defaults to floor((N-1)^(1/3)).
    #[arg(long)]
    lags: Option<usize>,
    /// Deterministic terms: "trend" (default) or "constant".
    #[arg(long, default_value = "trend")]
    regression: String,
}

#[derive(Args)]
struct FitArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(short)]
    p: usize,
    #[arg(short)]
    d: usize,
    #[arg(short)]
    q: usize,
    #[arg(long)]
    drift: bool,
    /// Exogenous regressor CSVs (repeatable); column names default to the
    /// file stems.
    #[arg(long)]
    exog: Vec<PathBuf>,
}

#[derive(Args)]
struct GridArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(short)]
    d: usize,
    #[arg(long, default_value_t = 3)]
    p_max: usize,
    #[arg(long, default_value_t = 3)]
    q_max: usize,
    #[arg(long)]
    drift: bool,
    #[arg(long)]
    exog: Vec<PathBuf>,
}

#[derive(Args)]
struct CoherenceArgs {
    #[arg(long)]
    x: PathBuf,
    #[arg(long)]
    y: PathBuf,
    #[arg(long, default_value_t = 9)]
    span: usize,
    #[arg(long, default_value_t = 0.01)]
    alpha: f64,
    #[arg(long, default_value_t = 0.1)]
    taper: f64,
    /// Disable linear detrending before the DFT.
    #[arg(long)]
    no_detrend: bool,
    /// Smoothing kernel: "daniell" (default) or "modified".
    #[arg(long, default_value = "daniell")]
    kernel: String,
    /// First-difference both series before the analysis.
    #[arg(long)]
    difference: bool,
    /// Also write the per-frequency CSV here.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct DiagnoseArgs {
    /// Residual series CSV.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value_t = 10)]
    lags: usize,
    /// Number of fitted parameters behind the residuals.
    #[arg(long, default_value_t = 0)]
    fitdf: usize,
    #[arg(long, default_value_t = 20)]
    max_lag: usize,
    /// Directory for the plot-data CSVs; JSON goes to stdout either way.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct FigureArgs {
    #[arg(long)]
    config: PathBuf,
    /// Figure id F1..F6.
    #[arg(long)]
    id: String,
    /// Render a minimal SVG line chart next to each CSV.
    #[arg(long)]
    svg: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn load_config(path: &PathBuf, out: Option<PathBuf>, seed: Option<u64>) -> Result<PipelineConfig> {
    let text = std::fs::read_to_string(path)?;
    let mut config: PipelineConfig = serde_json::from_str(&text)
        .map_err(|e| Error::Usage(format!("invalid config {}: {e}", path.display())))?;
    if let Ok(dir) = std::env::var("TELECONNECT_OUTPUT_DIR") {
        config.output_dir = PathBuf::from(dir);
    }
    if let Some(dir) = out {
        config.output_dir = dir;
    }
    if let Some(s) = seed {
        config.seed = s;
    }
    Ok(config)
}

fn print_json<T: serde::Serialize>(value: &T) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn fit_block_json(m: &arima::FittedModel) -> serde_json::Value {
    serde_json::to_value(report::FitBlock::from_model(m)).unwrap_or(serde_json::Value::Null)
}

fn load_exog(paths: &[PathBuf], n: usize) -> Result<(Vec<String>, ExogMatrix)> {
    let mut names = Vec::new();
    let mut cols = Vec::new();
    for p in paths {
        let s = read_series_csv(p)?;
        let vals = s.complete_values()?;
        if vals.len() != n {
            return Err(Error::Domain(format!(
                "exogenous series {} has length {}, expected {n}",
                p.display(),
                vals.len()
            )));
        }
        names.push(
            p.file_stem()
                .map(|s| s.to_string_lossy().to_string())
                .unwrap_or_else(|| "exog".to_string()),
        );
        cols.push(vals.to_vec());
    }
    Ok((names.clone(), ExogMatrix::new(names, cols)))
}

fn real_main() -> Result<i32> {
    let cli = Cli::parse();
    match cli.command {
        Command::Run(args) => {
            let config = load_config(&args.config, args.out, args.seed)?;
            let run = report::run_pipeline(&config)?;
            println!("report written to {}", config.output_dir.join("report.json").display());
            if args.check {
                let checks = reference_checks(&run.report);
                let mut all_pass = true;
                for c in &checks {
                    println!(
                        "[{}] {}: observed {} target {} (tolerance {})",
                        if c.pass { "PASS" } else { "FAIL" },
                        c.name,
                        c.observed,
                        c.target,
                        c.tolerance
                    );
                    all_pass &= c.pass;
                }
                if !all_pass {
                    return Ok(5);
                }
            }
            Ok(0)
        }
        Command::Adf(args) => {
            let s = read_series_csv(&args.input)?.trim_missing()?;
            let regression = match args.regression.as_str() {
                "trend" => Regression::Trend,
                "constant" => Regression::Constant,
                other => return Err(Error::Usage(format!("unknown regression '{other}'"))),
            };
            let res = stationarity::adf_test_with(&s, args.lags, regression)?;
            print_json(&res)?;
            Ok(0)
        }
        Command::Fit(args) => {
            let y = read_series_csv(&args.input)?.trim_missing()?;
            let (names, exog) = load_exog(&args.exog, y.len())?;
            let mut spec = ModelSpec::new(args.p, args.d, args.q);
            if args.drift {
                spec.include_drift = true;
            }
            spec.exog_names = names;
            let exog_opt = if exog.is_empty() { None } else { Some(&exog) };
            let m = arima::fit(&spec, &y, exog_opt)?;
            println!("{}", serde_json::to_string_pretty(&fit_block_json(&m))?);
            Ok(0)
        }
        Command::Gridsearch(args) => {
            let y = read_series_csv(&args.input)?.trim_missing()?;
            let (_, exog) = load_exog(&args.exog, y.len())?;
            let exog_opt = if exog.is_empty() { None } else { Some(&exog) };
            let m = arima::grid_search(&y, exog_opt, args.d, args.p_max, args.q_max, args.drift)?;
            println!("{}", serde_json::to_string_pretty(&fit_block_json(&m))?);
            Ok(0)
        }
        Command::Coherence(args) => {
            let mut x = read_series_csv(&args.x)?.trim_missing()?;
            let mut y = read_series_csv(&args.y)?.trim_missing()?;
            if args.difference {
                x = series::difference(&x, 1)?;
                y = series::difference(&y, 1)?;
            }
            let opts = SpectralOptions {
                span: args.span,
                detrend: !args.no_detrend,
                taper: args.taper,
                kernel: Kernel::from_str(&args.kernel)?,
            };
            let est = spectral::periodogram_pair_with(&x, &y, &opts)?;
            let thr = spectral::coherence_threshold(est.n, args.span, args.alpha)?;
            let bands = spectral::significant_bands(&est, &thr)?;
            let peak = spectral::peak_coherence(&est);
            let out = serde_json::json!({
                "threshold": thr,
                "bands": bands,
                "peak": { "frequency": peak.0, "coherence": peak.1 },
                "kernel": opts.kernel,
                "n": est.n,
            });
            print_json(&out)?;
            if let Some(path) = args.csv {
                std::fs::write(&path, report::coherence_csv(&est, thr.c))?;
            }
            Ok(0)
        }
        Command::Diagnose(args) => {
            let resid = read_series_csv(&args.input)?.trim_missing()?;
            let lb = diagnostics::ljung_box(&resid, args.lags, args.fitdf)?;
            let rep = diagnostics::residual_report(&resid, args.max_lag)?;
            let out = serde_json::json!({
                "ljung_box": lb,
                "acf": rep.acf,
                "histogram": rep.histogram,
            });
            print_json(&out)?;
            if let Some(dir) = args.out {
                std::fs::create_dir_all(&dir)?;
                let mut csv = String::from("lag,acf,bound\n");
                for k in 0..=rep.acf.max_lag {
                    csv.push_str(&format!(
                        "{},{},{}\n",
                        k, rep.acf.values[k], rep.acf.confidence_bound
                    ));
                }
                std::fs::write(dir.join("residual_acf.csv"), csv)?;
                let mut csv = String::from("x,density\n");
                for (x, d) in &rep.density {
                    csv.push_str(&format!("{x},{d}\n"));
                }
                std::fs::write(dir.join("residual_density.csv"), csv)?;
            }
            Ok(0)
        }
        Command::Figure(args) => {
            let config = load_config(&args.config, args.out.clone(), None)?;
            let figure = Figure::from_str(&args.id)?;
            let run = report::compute_pipeline(&config)?;
            let dir = args.out.unwrap_or_else(|| config.output_dir.clone());
            let files = emit_figure_data(&run, figure, &dir, args.svg)?;
            for f in files {
                println!("{}", f.display());
            }
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    match real_main() {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
