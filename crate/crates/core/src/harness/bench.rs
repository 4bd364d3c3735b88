//! Wall-time scaling of the Kendall statistics and the full two-step fit.

use std::path::{Path, PathBuf};
use std::time::Instant;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use super::{ensure_dir, with_threads};
use crate::error::{Error, Result};
use crate::estimator::{mrts_factors, mrts_loadings};
use crate::io::{write_table_with_comments, Record};
use crate::kendall::{kendall, Side};
use crate::rng::{split_seed, stream_rng, Stream};
use crate::series::MatrixSeries;

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub ts: Vec<usize>,
    /// Square dimensions `p1 = p2 = p`.
    pub ps: Vec<usize>,
    /// Timings keep the fastest of this many runs.
    pub repeats: usize,
    pub k: usize,
    pub seed: u64,
    pub threads: usize,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            ts: vec![25, 50, 100],
            ps: vec![20, 40],
            repeats: 3,
            k: 3,
            seed: 1,
            threads: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub t: usize,
    pub p: usize,
    /// Row plus column Kendall's tau, seconds.
    pub kendall_secs: f64,
    /// Loadings plus factor scores, seconds.
    pub mrts_secs: f64,
    /// Log-log slope of `kendall_secs` against `T` at this `p`.
    pub slope_t: Option<f64>,
}

fn min_time(repeats: usize, mut f: impl FnMut() -> Result<()>) -> Result<f64> {
    let mut best = f64::INFINITY;
    for _ in 0..repeats {
        let start = Instant::now();
        f()?;
        best = best.min(start.elapsed().as_secs_f64());
    }
    Ok(best)
}

/// Least-squares slope of `ln y` on `ln x`.
pub fn loglog_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let lx: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ly: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let n = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    Some(sxy / sxx)
}

fn gaussian_series(t: usize, p: usize, seed: u64) -> Result<MatrixSeries> {
    let mut rng = stream_rng(seed, Stream::Auxiliary);
    MatrixSeries::new(
        (0..t)
            .map(|_| DMatrix::from_fn(p, p, |_, _| rng.sample::<f64, _>(StandardNormal)))
            .collect(),
    )
}

pub fn run_bench(cfg: &BenchConfig) -> Result<Vec<BenchRow>> {
    if cfg.ts.is_empty() || cfg.ps.is_empty() || cfg.repeats == 0 {
        return Err(Error::Config("bench grid and repeat count must be non-empty".into()));
    }
    if cfg.ts.iter().any(|&t| t < 2) || cfg.ps.iter().any(|&p| p < cfg.k.max(1)) {
        return Err(Error::Config(format!(
            "bench needs T >= 2 and p >= k = {}",
            cfg.k
        )));
    }
    with_threads(cfg.threads, || {
        let mut rows = Vec::new();
        for (pi, &p) in cfg.ps.iter().enumerate() {
            let mut group = Vec::new();
            for (ti, &t) in cfg.ts.iter().enumerate() {
                let series = gaussian_series(t, p, split_seed(cfg.seed, (pi * cfg.ts.len() + ti) as u64))?;
                let kendall_secs = min_time(cfg.repeats, || {
                    kendall(&series, Side::Row, None)?;
                    kendall(&series, Side::Column, None)?;
                    Ok(())
                })?;
                let mrts_secs = min_time(cfg.repeats, || {
                    let l = mrts_loadings(&series, cfg.k, cfg.k)?;
                    mrts_factors(&series, &l)?;
                    Ok(())
                })?;
                group.push(BenchRow {
                    t,
                    p,
                    kendall_secs,
                    mrts_secs,
                    slope_t: None,
                });
            }
            let slope = loglog_slope(
                &group
                    .iter()
                    .map(|r| (r.t as f64, r.kendall_secs))
                    .collect::<Vec<_>>(),
            );
            for r in &mut group {
                r.slope_t = slope;
            }
            rows.extend(group);
        }
        Ok(rows)
    })?
}

pub fn bench_records(rows: &[BenchRow]) -> Vec<Record> {
    rows.iter()
        .map(|r| {
            Record::new()
                .with("T", r.t)
                .with("p1", r.p)
                .with("p2", r.p)
                .with("kendall_secs", r.kendall_secs)
                .with("mrts_secs", r.mrts_secs)
                .with("loglog_slope_T", r.slope_t)
        })
        .collect()
}

pub fn write_bench(rows: &[BenchRow], comments: &[String], out_dir: &Path) -> Result<PathBuf> {
    let records = bench_records(rows);
    ensure_dir(out_dir)?;
    let path = out_dir.join("bench.csv");
    write_table_with_comments(&records, comments, &path)?;
    Ok(path)
}
