//! Factor-number selection report.

use std::path::{Path, PathBuf};

use super::require_file;
use crate::error::Result;
use crate::estimator::{Method, RankConfig, Scatter};
use crate::io::{load_series, write_table_with_comments, Record, SeriesFormat};
use crate::kendall::Side;
use crate::series::MatrixSeries;
use crate::spectral::{floor_spectrum, RankSelection};

#[derive(Debug, Clone)]
pub struct RankRunConfig {
    pub input: PathBuf,
    pub format: Option<SeriesFormat>,
    pub methods: Vec<Method>,
    pub rank: RankConfig,
}

/// Selection for one method and side, with the spectrum it was computed from.
#[derive(Debug, Clone)]
pub struct RankTrace {
    pub method: Method,
    pub side: Side,
    /// Floored eigenvalues (first `kmax + 1`).
    pub eigenvalues: Vec<f64>,
    pub selection: RankSelection,
}

pub fn rank_series(series: &MatrixSeries, methods: &[Method], rank: &RankConfig) -> Result<Vec<RankTrace>> {
    let mut out = Vec::new();
    for &method in methods {
        let scatter = Scatter::compute(series, method)?;
        let (row, col) = scatter.ranks(rank)?;
        for (side, eig, sel) in [(Side::Row, &scatter.row, row), (Side::Column, &scatter.col, col)] {
            let floored = floor_spectrum(eig.values.as_slice());
            out.push(RankTrace {
                method,
                side,
                eigenvalues: floored[..rank.kmax + 1].to_vec(),
                selection: sel,
            });
        }
    }
    Ok(out)
}

pub fn run_rank(cfg: &RankRunConfig) -> Result<Vec<RankTrace>> {
    require_file(&cfg.input)?;
    let format = cfg.format.unwrap_or_else(|| SeriesFormat::from_path(&cfg.input));
    let series = load_series(&cfg.input, format)?;
    rank_series(&series, &cfg.methods, &cfg.rank)
}

/// One row per `(method, side, j)`.
pub fn rank_records(traces: &[RankTrace]) -> Vec<Record> {
    let mut rows = Vec::new();
    for tr in traces {
        let s = &tr.selection;
        for j in 1..=s.kmax {
            rows.push(
                Record::new()
                    .with("method", tr.method.name())
                    .with("side", tr.side.name())
                    .with("j", j)
                    .with("eigenvalue", tr.eigenvalues[j - 1])
                    .with("adjusted", tr.eigenvalues[j - 1] + s.c * s.delta)
                    .with("ratio", s.ratios[j - 1])
                    .with("khat", s.k_hat)
                    .with("selected", if j == s.k_hat { 1usize } else { 0 })
                    .with("kmax", s.kmax)
                    .with("c", s.c)
                    .with("delta", s.delta)
                    .with("epsilon", s.epsilon),
            );
        }
    }
    rows
}

pub fn write_rank(traces: &[RankTrace], comments: &[String], out_dir: &Path) -> Result<PathBuf> {
    let rows = rank_records(traces);
    super::ensure_dir(out_dir)?;
    let path = out_dir.join("rank.csv");
    write_table_with_comments(&rows, comments, &path)?;
    Ok(path)
}
