//! Loading, factor and rank estimation for the matrix factor model.
//!
//! Two scatter objects drive the estimators:
//!
//! * `mrts`: the row/column matrix Kendall's tau. Loadings are `sqrt(p)` times
//!   the leading eigenvectors; ranks come from the eigenvalue-ratio rule with
//!   the optional ridge `c·δ`.
//! * `apca`: the mean-centered second moments
//!   `(1/(T p1 p2)) Σ_t (X_t - X̄)(X_t - X̄)^T` and its column analogue, with
//!   the plain eigenvalue-ratio rule. This is the non-robust baseline.
//!
//! Factor scores are the least-squares solution `F̂_t = R̂^T X_t Ĉ / (p1 p2)`
//! for either set of loadings.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::kendall::{kendall, Side};
use crate::series::MatrixSeries;
use crate::spectral::{floor_spectrum, ratio_rank, sym_eigen, EigenDecomp, RankSelection};

/// Spectral gaps below this make the loading space ill-identified.
pub const DEGENERATE_GAP: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Mrts,
    Apca,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Mrts => "mrts",
            Method::Apca => "apca",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "mrts" => Ok(Method::Mrts),
            "apca" | "alpha-pca" | "pca" => Ok(Method::Apca),
            other => Err(Error::Config(format!("unknown method `{other}` (use mrts or apca)"))),
        }
    }
}

/// Parameters of the eigenvalue-ratio rank selector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankConfig {
    pub kmax: usize,
    /// Ridge constant; 0 disables the regularization.
    pub c: f64,
    pub epsilon: f64,
}

impl Default for RankConfig {
    fn default() -> Self {
        RankConfig {
            kmax: 8,
            c: 0.0,
            epsilon: 0.05,
        }
    }
}

/// `(δ1, δ2) = (1/sqrt(min(p2, T^{1-ε})), 1/sqrt(min(p1, T^{1-ε})))`.
pub fn ridge_deltas(t: usize, p1: usize, p2: usize, epsilon: f64) -> (f64, f64) {
    let tt = (t as f64).powf(1.0 - epsilon);
    (
        1.0 / (p2 as f64).min(tt).sqrt(),
        1.0 / (p1 as f64).min(tt).sqrt(),
    )
}

/// Estimated loadings, scaled so that `R̂^T R̂ / p1 = I` and `Ĉ^T Ĉ / p2 = I`.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadingEstimate {
    pub r_hat: DMatrix<f64>,
    pub c_hat: DMatrix<f64>,
    pub row_eigenvalues: Vec<f64>,
    pub col_eigenvalues: Vec<f64>,
    pub method: Method,
    pub warnings: Vec<String>,
}

impl LoadingEstimate {
    pub fn ranks(&self) -> (usize, usize) {
        (self.r_hat.ncols(), self.c_hat.ncols())
    }
}

/// Loadings plus factor scores and (optionally) fitted common components.
#[derive(Debug, Clone)]
pub struct FactorFit {
    pub loadings: LoadingEstimate,
    pub factors: Vec<DMatrix<f64>>,
    pub common: Option<MatrixSeries>,
}

/// Eigendecompositions of the row and column scatter objects of one data set.
#[derive(Debug, Clone)]
pub struct Scatter {
    pub method: Method,
    pub row: EigenDecomp,
    pub col: EigenDecomp,
    t: usize,
}

impl Scatter {
    pub fn compute(series: &MatrixSeries, method: Method) -> Result<Self> {
        match method {
            Method::Mrts => Self::mrts(series),
            Method::Apca => Self::apca(series),
        }
    }

    pub fn mrts(series: &MatrixSeries) -> Result<Self> {
        let row = kendall(series, Side::Row, None)?;
        let col = kendall(series, Side::Column, None)?;
        Ok(Scatter {
            method: Method::Mrts,
            row: sym_eigen(&row.mat)?,
            col: sym_eigen(&col.mat)?,
            t: series.len(),
        })
    }

    pub fn apca(series: &MatrixSeries) -> Result<Self> {
        if series.len() < 2 {
            return Err(Error::Parameter(format!(
                "second-moment PCA needs at least 2 observations, got {}",
                series.len()
            )));
        }
        let (n_t, p1, p2) = series.dims();
        let mean = series.mean();
        let mut row = DMatrix::<f64>::zeros(p1, p1);
        let mut col = DMatrix::<f64>::zeros(p2, p2);
        for x in series.slices() {
            let d = x - &mean;
            row += &d * d.transpose();
            col += d.transpose() * &d;
        }
        let scale = 1.0 / (n_t * p1 * p2) as f64;
        row *= scale;
        col *= scale;
        Ok(Scatter {
            method: Method::Apca,
            row: sym_eigen(&row)?,
            col: sym_eigen(&col)?,
            t: n_t,
        })
    }

    pub fn p1(&self) -> usize {
        self.row.values.len()
    }

    pub fn p2(&self) -> usize {
        self.col.values.len()
    }

    /// `sqrt(p)`-scaled leading eigenvectors.
    pub fn loadings(&self, k1: usize, k2: usize) -> Result<LoadingEstimate> {
        let (p1, p2) = (self.p1(), self.p2());
        check_ranks(k1, k2, p1, p2)?;
        let mut warnings = Vec::new();
        for (name, eig, k) in [("row", &self.row, k1), ("column", &self.col, k2)] {
            let gap = eig.gap(k);
            if gap < DEGENERATE_GAP {
                warnings.push(format!(
                    "degenerate {name} spectral gap {gap:e} at k = {k}; loading space is ill-identified"
                ));
            }
        }
        Ok(LoadingEstimate {
            r_hat: self.row.leading(k1) * (p1 as f64).sqrt(),
            c_hat: self.col.leading(k2) * (p2 as f64).sqrt(),
            row_eigenvalues: self.row.values.iter().copied().collect(),
            col_eigenvalues: self.col.values.iter().copied().collect(),
            method: self.method,
            warnings,
        })
    }

    /// Eigenvalue-ratio ranks. The Kendall scatter uses the `c·δ` ridge from
    /// `cfg`; the second-moment baseline always runs unregularized.
    pub fn ranks(&self, cfg: &RankConfig) -> Result<(RankSelection, RankSelection)> {
        let (p1, p2) = (self.p1(), self.p2());
        if cfg.kmax == 0 || cfg.kmax + 1 > p1.min(p2) {
            return Err(Error::Parameter(format!(
                "kmax = {} must satisfy 1 <= kmax < min(p1, p2) = {}",
                cfg.kmax,
                p1.min(p2)
            )));
        }
        let (c, d1, d2) = match self.method {
            Method::Mrts => {
                let (d1, d2) = ridge_deltas(self.t, p1, p2, cfg.epsilon);
                (cfg.c, d1, d2)
            }
            Method::Apca => (0.0, 0.0, 0.0),
        };
        let row_vals = floor_spectrum(self.row.values.as_slice());
        let col_vals = floor_spectrum(self.col.values.as_slice());
        Ok((
            ratio_rank(&row_vals, cfg.kmax, c, d1, cfg.epsilon)?,
            ratio_rank(&col_vals, cfg.kmax, c, d2, cfg.epsilon)?,
        ))
    }
}

fn check_ranks(k1: usize, k2: usize, p1: usize, p2: usize) -> Result<()> {
    if !(1..=p1).contains(&k1) || !(1..=p2).contains(&k2) {
        return Err(Error::Parameter(format!(
            "ranks ({k1}, {k2}) must satisfy 1 <= k1 <= {p1} and 1 <= k2 <= {p2}"
        )));
    }
    Ok(())
}

fn check_series(series: &MatrixSeries, k1: usize, k2: usize) -> Result<()> {
    if series.len() < 2 {
        return Err(Error::Parameter(format!(
            "loading estimation needs at least 2 observations, got {}",
            series.len()
        )));
    }
    check_ranks(k1, k2, series.p1(), series.p2())
}

/// Kendall-based loadings.
pub fn mrts_loadings(series: &MatrixSeries, k1: usize, k2: usize) -> Result<LoadingEstimate> {
    check_series(series, k1, k2)?;
    Scatter::mrts(series)?.loadings(k1, k2)
}

/// Second-moment (α = 0, mean-centered) PCA loadings.
pub fn apca_loadings(series: &MatrixSeries, k1: usize, k2: usize) -> Result<LoadingEstimate> {
    check_series(series, k1, k2)?;
    Scatter::apca(series)?.loadings(k1, k2)
}

/// Least-squares factor scores for any loading estimate.
pub fn mrts_factors(series: &MatrixSeries, loadings: &LoadingEstimate) -> Result<FactorFit> {
    let (_, p1, p2) = series.dims();
    if loadings.r_hat.nrows() != p1 || loadings.c_hat.nrows() != p2 {
        return Err(Error::Parameter(format!(
            "loadings are {}x{} / {}x{} but observations are {p1}x{p2}",
            loadings.r_hat.nrows(),
            loadings.r_hat.ncols(),
            loadings.c_hat.nrows(),
            loadings.c_hat.ncols()
        )));
    }
    let scale = 1.0 / (p1 * p2) as f64;
    let rt = loadings.r_hat.transpose();
    let ct = loadings.c_hat.transpose();
    let factors: Vec<DMatrix<f64>> = series
        .slices()
        .iter()
        .map(|x| &rt * x * &loadings.c_hat * scale)
        .collect();
    let common = MatrixSeries::new(
        factors
            .iter()
            .map(|f| &loadings.r_hat * f * &ct)
            .collect(),
    )?;
    Ok(FactorFit {
        loadings: loadings.clone(),
        factors,
        common: Some(common),
    })
}

/// MKER rank pair `(row, column)`.
pub fn mker_ranks(series: &MatrixSeries, cfg: &RankConfig) -> Result<(RankSelection, RankSelection)> {
    Scatter::mrts(series)?.ranks(cfg)
}

/// Eigenvalue-ratio ranks from the second-moment baseline.
pub fn apca_ranks(series: &MatrixSeries, kmax: usize) -> Result<(RankSelection, RankSelection)> {
    Scatter::apca(series)?.ranks(&RankConfig {
        kmax,
        c: 0.0,
        ..RankConfig::default()
    })
}
