//! Monte-Carlo replications of the synthetic scenarios.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use nalgebra::DMatrix;
use rayon::prelude::*;

use super::{ensure_dir, mean_sd, mean_sd_cell, with_threads};
use crate::error::{Error, Result};
use crate::estimator::{mrts_factors, Method, RankConfig, Scatter};
use crate::io::{write_table_with_comments, Record};
use crate::metrics::{factor_mse, mse_common, subspace_distance};
use crate::rng::{split_seed, stream_rng, Stream};
use crate::sim::{draw_loadings, generate_with_loadings, Dist, ScenarioSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    /// Independent observations.
    A,
    /// AR(1) factors and noise with coefficient 0.1.
    B,
}

impl Scenario {
    /// `(phi, psi)` of the scenario.
    pub fn ar_coefficients(&self) -> (f64, f64) {
        match self {
            Scenario::A => (0.0, 0.0),
            Scenario::B => (0.1, 0.1),
        }
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "A" | "a" => Ok(Scenario::A),
            "B" | "b" => Ok(Scenario::B),
            other => Err(Error::Config(format!("unknown scenario `{other}` (use A or B)"))),
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scenario::A => "A",
            Scenario::B => "B",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulateConfig {
    pub scenario: Scenario,
    pub dist: Dist,
    pub t: usize,
    pub p1: usize,
    pub p2: usize,
    pub k1: usize,
    pub k2: usize,
    pub phi: f64,
    pub psi: f64,
    pub reps: usize,
    pub methods: Vec<Method>,
    pub rank: RankConfig,
    pub seed: u64,
    pub threads: usize,
    /// Draw the loadings once per experiment instead of once per replication.
    pub fixed_loadings: bool,
}

impl SimulateConfig {
    /// Defaults: three factors per side, both methods, 100 replications.
    pub fn new(scenario: Scenario, dist: Dist, t: usize, p1: usize, p2: usize) -> Self {
        let (phi, psi) = scenario.ar_coefficients();
        SimulateConfig {
            scenario,
            dist,
            t,
            p1,
            p2,
            k1: 3,
            k2: 3,
            phi,
            psi,
            reps: 100,
            methods: vec![Method::Mrts, Method::Apca],
            rank: RankConfig::default(),
            seed: 1,
            threads: 1,
            fixed_loadings: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.reps == 0 {
            return Err(Error::Config("reps must be at least 1".into()));
        }
        if self.methods.is_empty() {
            return Err(Error::Config("at least one method is required".into()));
        }
        if self.t < 2 {
            return Err(Error::Config("T must be at least 2".into()));
        }
        if self.rank.kmax == 0 || self.rank.kmax + 1 > self.p1.min(self.p2) {
            return Err(Error::Config(format!(
                "kmax = {} must satisfy 1 <= kmax < min(p1, p2)",
                self.rank.kmax
            )));
        }
        self.spec(0).validate().map_err(|e| Error::Config(e.to_string()))
    }

    fn spec(&self, seed: u64) -> ScenarioSpec {
        ScenarioSpec {
            t: self.t,
            p1: self.p1,
            p2: self.p2,
            k1: self.k1,
            k2: self.k2,
            dist: self.dist,
            phi: self.phi,
            psi: self.psi,
            seed,
        }
    }

    /// Result-determining settings as `key = value` lines (thread count excluded).
    pub fn echo(&self) -> Vec<String> {
        let methods: Vec<&str> = self.methods.iter().map(|m| m.name()).collect();
        vec![
            "command = simulate".to_string(),
            format!("scenario = {}", self.scenario),
            format!("dist = {}", self.dist),
            format!("T = {}", self.t),
            format!("p1 = {}", self.p1),
            format!("p2 = {}", self.p2),
            format!("k1 = {}", self.k1),
            format!("k2 = {}", self.k2),
            format!("phi = {}", self.phi),
            format!("psi = {}", self.psi),
            format!("reps = {}", self.reps),
            format!("methods = {}", methods.join(",")),
            format!("kmax = {}", self.rank.kmax),
            format!("ridge-c = {}", self.rank.c),
            format!("epsilon = {}", self.rank.epsilon),
            format!("seed = {}", self.seed),
            format!("fixed-loadings = {}", self.fixed_loadings),
        ]
    }
}

/// One (replication, method) result.
#[derive(Debug, Clone, PartialEq)]
pub struct RepRow {
    pub rep: usize,
    pub method: Method,
    pub dist: Dist,
    pub t: usize,
    pub p1: usize,
    pub p2: usize,
    pub d_r: f64,
    pub d_c: f64,
    pub mse: f64,
    pub khat1: usize,
    pub khat2: usize,
    /// Per-entry factor-score error, see [`factor_mse`].
    pub mse_f: f64,
    pub seed: u64,
}

impl RepRow {
    pub fn record(&self) -> Record {
        Record::new()
            .with("rep", self.rep)
            .with("method", self.method.name())
            .with("dist", self.dist.to_string())
            .with("T", self.t)
            .with("p1", self.p1)
            .with("p2", self.p2)
            .with("D_R", self.d_r)
            .with("D_C", self.d_c)
            .with("MSE", self.mse)
            .with("khat1", self.khat1)
            .with("khat2", self.khat2)
            .with("MSE_F", self.mse_f)
            .with("seed", self.seed)
    }
}

/// Per-method aggregate over replications.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub method: Method,
    pub reps: usize,
    pub d_r: (f64, f64),
    pub d_c: (f64, f64),
    pub mse: (f64, f64),
    pub mse_f: (f64, f64),
    /// Frequency of `khat1 == k1`.
    pub exact_k1: f64,
    pub exact_k2: f64,
    /// Both ranks recovered.
    pub exact_both: f64,
    /// Frequency of `khat1 < k1`.
    pub under_k1: f64,
    pub under_k2: f64,
}

#[derive(Debug, Clone)]
pub struct SimulateReport {
    pub config: SimulateConfig,
    pub rows: Vec<RepRow>,
    pub summary: Vec<SummaryRow>,
}

impl SimulateReport {
    pub fn summary_for(&self, method: Method) -> Option<&SummaryRow> {
        self.summary.iter().find(|s| s.method == method)
    }
}

pub fn run_simulate(cfg: &SimulateConfig) -> Result<SimulateReport> {
    cfg.validate()?;
    let fixed = cfg.fixed_loadings.then(|| {
        let mut rng = stream_rng(cfg.seed, Stream::Loadings);
        draw_loadings(cfg.p1, cfg.k1, cfg.p2, cfg.k2, &mut rng)
    });

    let per_rep: Vec<Result<Vec<RepRow>>> = with_threads(cfg.threads, || {
        (0..cfg.reps)
            .into_par_iter()
            .map(|rep| {
                let seed = split_seed(cfg.seed, rep as u64);
                replicate(cfg, rep, seed, fixed.as_ref()).map_err(|e| Error::Replication {
                    rep,
                    seed,
                    source: Box::new(e),
                })
            })
            .collect()
    })?;

    let mut rows = Vec::with_capacity(cfg.reps * cfg.methods.len());
    for r in per_rep {
        rows.extend(r?);
    }
    let summary = cfg
        .methods
        .iter()
        .map(|&m| summarize(cfg, m, &rows))
        .collect();
    Ok(SimulateReport {
        config: cfg.clone(),
        rows,
        summary,
    })
}

fn replicate(
    cfg: &SimulateConfig,
    rep: usize,
    seed: u64,
    fixed: Option<&(DMatrix<f64>, DMatrix<f64>)>,
) -> Result<Vec<RepRow>> {
    let spec = cfg.spec(seed);
    let (r, c) = match fixed {
        Some((r, c)) => (r.clone(), c.clone()),
        None => {
            let mut rng = stream_rng(seed, Stream::Loadings);
            draw_loadings(spec.p1, spec.k1, spec.p2, spec.k2, &mut rng)
        }
    };
    let (x, truth) = generate_with_loadings(&spec, r, c)?;

    let mut out = Vec::with_capacity(cfg.methods.len());
    for &method in &cfg.methods {
        let scatter = Scatter::compute(&x, method)?;
        let loadings = scatter.loadings(cfg.k1, cfg.k2)?;
        let fit = mrts_factors(&x, &loadings)?;
        let common = fit.common.as_ref().expect("factor fit fills common components");
        let (rank_r, rank_c) = scatter.ranks(&cfg.rank)?;
        out.push(RepRow {
            rep,
            method,
            dist: cfg.dist,
            t: cfg.t,
            p1: cfg.p1,
            p2: cfg.p2,
            d_r: subspace_distance(&loadings.r_hat, &truth.r)?,
            d_c: subspace_distance(&loadings.c_hat, &truth.c)?,
            mse: mse_common(common, &truth.common)?,
            khat1: rank_r.k_hat,
            khat2: rank_c.k_hat,
            mse_f: factor_mse(
                &fit.factors,
                &loadings.r_hat,
                &loadings.c_hat,
                &truth.factors,
                &truth.r,
                &truth.c,
            )?,
            seed,
        });
    }
    Ok(out)
}

fn summarize(cfg: &SimulateConfig, method: Method, rows: &[RepRow]) -> SummaryRow {
    let mine: Vec<&RepRow> = rows.iter().filter(|r| r.method == method).collect();
    let col = |f: fn(&RepRow) -> f64| mean_sd(&mine.iter().map(|r| f(r)).collect::<Vec<_>>());
    let n = mine.len() as f64;
    let freq = |pred: &dyn Fn(&RepRow) -> bool| mine.iter().filter(|r| pred(r)).count() as f64 / n;
    SummaryRow {
        method,
        reps: mine.len(),
        d_r: col(|r| r.d_r),
        d_c: col(|r| r.d_c),
        mse: col(|r| r.mse),
        mse_f: col(|r| r.mse_f),
        exact_k1: freq(&|r| r.khat1 == cfg.k1),
        exact_k2: freq(&|r| r.khat2 == cfg.k2),
        exact_both: freq(&|r| r.khat1 == cfg.k1 && r.khat2 == cfg.k2),
        under_k1: freq(&|r| r.khat1 < cfg.k1),
        under_k2: freq(&|r| r.khat2 < cfg.k2),
    }
}

impl SummaryRow {
    pub fn record(&self, cfg: &SimulateConfig) -> Record {
        Record::new()
            .with("method", self.method.name())
            .with("dist", cfg.dist.to_string())
            .with("T", cfg.t)
            .with("p1", cfg.p1)
            .with("p2", cfg.p2)
            .with("reps", self.reps)
            .with("mean_D_R", self.d_r.0)
            .with("sd_D_R", self.d_r.1)
            .with("mean_D_C", self.d_c.0)
            .with("sd_D_C", self.d_c.1)
            .with("mean_MSE", self.mse.0)
            .with("sd_MSE", self.mse.1)
            .with("mean_MSE_F", self.mse_f.0)
            .with("sd_MSE_F", self.mse_f.1)
            .with("exact_k1", self.exact_k1)
            .with("exact_k2", self.exact_k2)
            .with("exact_both", self.exact_both)
            .with("under_k1", self.under_k1)
            .with("under_k2", self.under_k2)
            .with("D_R", mean_sd_cell(self.d_r.0, self.d_r.1, 4))
            .with("D_C", mean_sd_cell(self.d_c.0, self.d_c.1, 4))
            .with("MSE", mean_sd_cell(self.mse.0, self.mse.1, 4))
    }
}

/// Paths written by [`write_simulate`].
#[derive(Debug, Clone)]
pub struct SimulateOutputs {
    pub reps: PathBuf,
    pub summary: PathBuf,
}

pub fn write_simulate(report: &SimulateReport, comments: &[String], out_dir: &Path) -> Result<SimulateOutputs> {
    ensure_dir(out_dir)?;
    let outputs = SimulateOutputs {
        reps: out_dir.join("simulate_reps.csv"),
        summary: out_dir.join("simulate_summary.csv"),
    };
    let rows: Vec<Record> = report.rows.iter().map(RepRow::record).collect();
    write_table_with_comments(&rows, comments, &outputs.reps)?;
    let summary: Vec<Record> = report
        .summary
        .iter()
        .map(|s| s.record(&report.config))
        .collect();
    write_table_with_comments(&summary, comments, &outputs.summary)?;
    Ok(outputs)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> SimulateConfig {
        SimulateConfig {
            reps: 3,
            ..SimulateConfig::new(Scenario::A, Dist::Normal, 12, 10, 10)
        }
    }

    #[test]
    fn rows_are_ordered_and_summarized() {
        let report = run_simulate(&tiny()).unwrap();
        assert_eq!(report.rows.len(), 6);
        assert_eq!(report.rows[0].rep, 0);
        assert_eq!(report.rows[0].method, Method::Mrts);
        assert_eq!(report.rows[1].method, Method::Apca);
        let s = report.summary_for(Method::Mrts).unwrap();
        let d: Vec<f64> = report
            .rows
            .iter()
            .filter(|r| r.method == Method::Mrts)
            .map(|r| r.d_r)
            .collect();
        assert!((s.d_r.0 - d.iter().sum::<f64>() / 3.0).abs() < 1e-15);
        for r in &report.rows {
            assert!((0.0..=1.0).contains(&r.d_r) && r.mse >= 0.0);
        }
    }

    #[test]
    fn fixed_loadings_share_truth() {
        let cfg = SimulateConfig {
            fixed_loadings: true,
            methods: vec![Method::Mrts],
            ..tiny()
        };
        let a = run_simulate(&cfg).unwrap();
        let b = run_simulate(&SimulateConfig { threads: 3, ..cfg }).unwrap();
        assert_eq!(a.rows, b.rows);
    }

    #[test]
    fn config_errors() {
        assert!(run_simulate(&SimulateConfig { reps: 0, ..tiny() }).is_err());
        let bad = SimulateConfig { k1: 20, ..tiny() };
        assert!(matches!(run_simulate(&bad), Err(Error::Config(_))));
        assert_eq!("B".parse::<Scenario>().unwrap().ar_coefficients(), (0.1, 0.1));
    }
}
