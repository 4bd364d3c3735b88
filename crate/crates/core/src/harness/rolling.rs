//! Rolling out-of-sample validation.
//!
//! Test blocks of `block` observations start at `window`, `window + block`, ...
//! Each block is explained with loadings trained on the `window` observations
//! immediately before it; factor scores for the block come from the
//! least-squares step with those loadings.

use std::path::{Path, PathBuf};

use super::{ensure_dir, require_file};
use crate::error::{Error, Result};
use crate::estimator::{mrts_factors, LoadingEstimate, Method, Scatter};
use crate::io::{load_series, write_table_with_comments, Record, SeriesFormat, Value};
use crate::metrics::{loading_variation, pricing_errors};
use crate::series::MatrixSeries;

#[derive(Debug, Clone, PartialEq)]
pub struct RollingParams {
    /// Training window length `n`.
    pub window: usize,
    /// Test block length.
    pub block: usize,
    pub k1: usize,
    pub k2: usize,
    pub method: Method,
}

#[derive(Debug, Clone)]
pub struct RollingConfig {
    pub input: PathBuf,
    pub format: Option<SeriesFormat>,
    pub params: RollingParams,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WindowRecord {
    pub id: usize,
    pub train_start: usize,
    pub test_start: usize,
    pub test_end: usize,
    pub mse: f64,
    pub rho: f64,
    /// Loading drift from the previous window; `None` for the first.
    pub v: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct RollingReport {
    pub params: RollingParams,
    pub windows: Vec<WindowRecord>,
    pub mean_mse: f64,
    pub mean_rho: f64,
    pub mean_v: Option<f64>,
}

/// Test-block start positions.
pub fn window_starts(len: usize, params: &RollingParams) -> Result<Vec<usize>> {
    if params.window < 2 || params.block == 0 {
        return Err(Error::Parameter(format!(
            "window must be >= 2 and block >= 1 (window = {}, block = {})",
            params.window, params.block
        )));
    }
    if params.window + params.block > len {
        return Err(Error::Parameter(format!(
            "window {} plus block {} exceeds the {len} available observations",
            params.window, params.block
        )));
    }
    Ok((params.window..=len - params.block)
        .step_by(params.block)
        .collect())
}

pub fn rolling_validate(series: &MatrixSeries, params: &RollingParams) -> Result<RollingReport> {
    let (k1, k2, method) = (params.k1, params.k2, params.method);
    rolling_validate_with(series, params, |train, test| {
        let loadings = Scatter::compute(train, method)?.loadings(k1, k2)?;
        let fit = mrts_factors(test, &loadings)?;
        let fitted = fit.common.expect("factor fit fills common components");
        Ok((loadings, fitted))
    })
}

/// Rolling validation with a caller-supplied fitting step, which maps
/// `(train, test)` to trained loadings and fitted test values.
pub fn rolling_validate_with<F>(series: &MatrixSeries, params: &RollingParams, fit: F) -> Result<RollingReport>
where
    F: Fn(&MatrixSeries, &MatrixSeries) -> Result<(LoadingEstimate, MatrixSeries)>,
{
    let starts = window_starts(series.len(), params)?;
    let mut windows = Vec::with_capacity(starts.len());
    let mut prev: Option<LoadingEstimate> = None;
    for (id, &start) in starts.iter().enumerate() {
        let train = series.window(start - params.window, start)?;
        let test = series.window(start, start + params.block)?;
        let (loadings, fitted) = fit(&train, &test)?;
        let (mse, rho) = pricing_errors(&test, &fitted)?;
        let v = match &prev {
            Some(p) => Some(loading_variation(&p.r_hat, &p.c_hat, &loadings.r_hat, &loadings.c_hat)?),
            None => None,
        };
        windows.push(WindowRecord {
            id,
            train_start: start - params.window,
            test_start: start,
            test_end: start + params.block,
            mse,
            rho,
            v,
        });
        prev = Some(loadings);
    }
    let n = windows.len() as f64;
    let vs: Vec<f64> = windows.iter().filter_map(|w| w.v).collect();
    Ok(RollingReport {
        params: params.clone(),
        mean_mse: windows.iter().map(|w| w.mse).sum::<f64>() / n,
        mean_rho: windows.iter().map(|w| w.rho).sum::<f64>() / n,
        mean_v: (!vs.is_empty()).then(|| vs.iter().sum::<f64>() / vs.len() as f64),
        windows,
    })
}

pub fn run_rolling(cfg: &RollingConfig) -> Result<RollingReport> {
    require_file(&cfg.input)?;
    let format = cfg.format.unwrap_or_else(|| SeriesFormat::from_path(&cfg.input));
    let series = load_series(&cfg.input, format)?;
    rolling_validate(&series, &cfg.params)
}

/// Window rows followed by a `mean` row.
pub fn rolling_records(report: &RollingReport) -> Vec<Record> {
    let p = &report.params;
    let mut rows: Vec<Record> = report
        .windows
        .iter()
        .map(|w| {
            Record::new()
                .with("window", w.id.to_string())
                .with("train_start", w.train_start)
                .with("test_start", w.test_start)
                .with("test_end", w.test_end)
                .with("MSE", w.mse)
                .with("rho", w.rho)
                .with("v", w.v)
                .with("n", p.window)
                .with("k1", p.k1)
                .with("k2", p.k2)
                .with("method", p.method.name())
        })
        .collect();
    rows.push(
        Record::new()
            .with("window", "mean")
            .with("train_start", Value::Empty)
            .with("test_start", Value::Empty)
            .with("test_end", Value::Empty)
            .with("MSE", report.mean_mse)
            .with("rho", report.mean_rho)
            .with("v", report.mean_v)
            .with("n", p.window)
            .with("k1", p.k1)
            .with("k2", p.k2)
            .with("method", p.method.name()),
    );
    rows
}

pub fn write_rolling(report: &RollingReport, comments: &[String], out_dir: &Path) -> Result<PathBuf> {
    let rows = rolling_records(report);
    ensure_dir(out_dir)?;
    let path = out_dir.join("rolling.csv");
    write_table_with_comments(&rows, comments, &path)?;
    Ok(path)
}
