//! Single-dataset estimation: loadings, factor scores, common components.

use std::path::{Path, PathBuf};

use serde_json::json;

use super::{ensure_dir, require_file};
use crate::error::{Error, Result};
use crate::estimator::{mrts_factors, FactorFit, Method, RankConfig, Scatter};
use crate::io::{load_series, save_matrix, save_series, SeriesFormat};
use crate::series::MatrixSeries;
use crate::spectral::RankSelection;

#[derive(Debug, Clone)]
pub struct EstimateConfig {
    pub input: PathBuf,
    /// Inferred from the extension when `None`.
    pub format: Option<SeriesFormat>,
    pub method: Method,
    pub k1: Option<usize>,
    pub k2: Option<usize>,
    pub rank: RankConfig,
}

#[derive(Debug, Clone)]
pub struct EstimateResult {
    pub fit: FactorFit,
    /// Present when at least one rank was selected from the data.
    pub selection: Option<(RankSelection, RankSelection)>,
    pub dims: (usize, usize, usize),
}

impl EstimateResult {
    pub fn ranks(&self) -> (usize, usize) {
        self.fit.loadings.ranks()
    }
}

pub fn run_estimate(cfg: &EstimateConfig) -> Result<EstimateResult> {
    require_file(&cfg.input)?;
    let format = cfg.format.unwrap_or_else(|| SeriesFormat::from_path(&cfg.input));
    let series = load_series(&cfg.input, format)?;
    estimate_series(&series, cfg.method, cfg.k1, cfg.k2, &cfg.rank)
}

/// Fits `series`; missing ranks are chosen by the method's eigenvalue-ratio rule.
pub fn estimate_series(
    series: &MatrixSeries,
    method: Method,
    k1: Option<usize>,
    k2: Option<usize>,
    rank: &RankConfig,
) -> Result<EstimateResult> {
    let scatter = Scatter::compute(series, method)?;
    let selection = if k1.is_none() || k2.is_none() {
        Some(scatter.ranks(rank)?)
    } else {
        None
    };
    let k1 = k1.unwrap_or_else(|| selection.as_ref().unwrap().0.k_hat);
    let k2 = k2.unwrap_or_else(|| selection.as_ref().unwrap().1.k_hat);
    let loadings = scatter.loadings(k1, k2)?;
    let fit = mrts_factors(series, &loadings)?;
    Ok(EstimateResult {
        fit,
        selection,
        dims: series.dims(),
    })
}

fn selection_json(sel: &RankSelection) -> serde_json::Value {
    json!({
        "k_hat": sel.k_hat,
        "ratios": sel.ratios,
        "kmax": sel.kmax,
        "c": sel.c,
        "delta": sel.delta,
        "epsilon": sel.epsilon,
    })
}

/// JSON metadata record describing a fit.
pub fn metadata(result: &EstimateResult, cfg: &EstimateConfig) -> serde_json::Value {
    let l = &result.fit.loadings;
    let (k1, k2) = result.ranks();
    let (t, p1, p2) = result.dims;
    json!({
        "method": l.method.name(),
        "input": cfg.input.display().to_string(),
        "T": t,
        "p1": p1,
        "p2": p2,
        "k1": k1,
        "k2": k2,
        "auto_rank": result.selection.is_some(),
        "row_selection": result.selection.as_ref().map(|s| selection_json(&s.0)),
        "col_selection": result.selection.as_ref().map(|s| selection_json(&s.1)),
        "kmax": cfg.rank.kmax,
        "c": cfg.rank.c,
        "epsilon": cfg.rank.epsilon,
        "row_eigenvalues": l.row_eigenvalues,
        "col_eigenvalues": l.col_eigenvalues,
        "warnings": l.warnings,
    })
}

#[derive(Debug, Clone)]
pub struct EstimateOutputs {
    pub r_hat: PathBuf,
    pub c_hat: PathBuf,
    pub factors: PathBuf,
    pub common: PathBuf,
    pub metadata: PathBuf,
}

pub fn write_estimate(result: &EstimateResult, cfg: &EstimateConfig, out_dir: &Path) -> Result<EstimateOutputs> {
    // Render everything before touching the output directory.
    let factors = MatrixSeries::new(result.fit.factors.clone())?;
    let common = result
        .fit
        .common
        .clone()
        .ok_or_else(|| Error::Parameter("fit has no common components".into()))?;
    let meta = serde_json::to_string_pretty(&metadata(result, cfg))
        .map_err(|e| Error::Validation(format!("metadata encoding failed: {e}")))?;

    ensure_dir(out_dir)?;
    let out = EstimateOutputs {
        r_hat: out_dir.join("R_hat.csv"),
        c_hat: out_dir.join("C_hat.csv"),
        factors: out_dir.join("factors.csv"),
        common: out_dir.join("common.csv"),
        metadata: out_dir.join("metadata.json"),
    };
    save_matrix(&result.fit.loadings.r_hat, &out.r_hat, SeriesFormat::LongCsv)?;
    save_matrix(&result.fit.loadings.c_hat, &out.c_hat, SeriesFormat::LongCsv)?;
    save_series(&factors, &out.factors, SeriesFormat::LongCsv)?;
    save_series(&common, &out.common, SeriesFormat::LongCsv)?;
    std::fs::write(&out.metadata, meta + "\n").map_err(|e| Error::io(&out.metadata, e))?;
    Ok(out)
}
