//! Row and column matrix Kendall's tau.
//!
//! For observations `X_1..X_T` the row statistic is the average over unordered
//! pairs of `(X_t - X_s)(X_t - X_s)^T / ||X_t - X_s||_F^2`, and the column
//! statistic uses `(X_t - X_s)^T (X_t - X_s)` instead. Each kernel is PSD with
//! unit trace, so the averages are too.
//!
//! Pairs are processed in chunks with a fixed layout (one anchor `t` and up to
//! [`PAIR_BLOCK`] partners) and the chunk sums are added in index order, so the
//! result does not depend on the rayon thread count.

use nalgebra::DMatrix;
use rand::seq::index;
use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::rng::SimRng;
use crate::series::MatrixSeries;
use crate::sim::{Dist, MatrixNormal};

/// Partners per anchor processed in one stacked product.
pub const PAIR_BLOCK: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Row,
    Column,
}

impl Side {
    pub fn dim(&self, p1: usize, p2: usize) -> usize {
        match self {
            Side::Row => p1,
            Side::Column => p2,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Side::Row => "row",
            Side::Column => "column",
        }
    }
}

/// A sample or Monte-Carlo matrix Kendall's tau.
#[derive(Debug, Clone, PartialEq)]
pub struct KendallTau {
    pub side: Side,
    pub mat: DMatrix<f64>,
    /// Non-degenerate pairs actually averaged.
    pub pairs_used: usize,
    /// `Some(n)` when `n` pairs were subsampled instead of using all of them.
    pub subsampled: Option<usize>,
}

impl KendallTau {
    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }
}

/// Kernel of a single pair.
pub fn pair_kernel(x: &DMatrix<f64>, xp: &DMatrix<f64>, side: Side) -> Result<DMatrix<f64>> {
    if x.shape() != xp.shape() {
        return Err(Error::Parameter(format!(
            "pair shapes differ: {:?} vs {:?}",
            x.shape(),
            xp.shape()
        )));
    }
    let d = x - xp;
    let norm2 = d.norm_squared();
    if norm2 == 0.0 {
        return Err(Error::Degenerate("identical observations form a degenerate pair".into()));
    }
    let outer = match side {
        Side::Row => &d * d.transpose(),
        Side::Column => d.transpose() * &d,
    };
    Ok(outer / norm2)
}

/// Optional pair subsampling.
pub struct Subsample<'a> {
    pub pairs: usize,
    pub rng: &'a mut SimRng,
}

/// Sample matrix Kendall's tau over all pairs, or over `subsample` distinct
/// pairs drawn uniformly. Tied pairs are skipped.
pub fn kendall(series: &MatrixSeries, side: Side, subsample: Option<Subsample<'_>>) -> Result<KendallTau> {
    let n_t = series.len();
    if n_t < 2 {
        return Err(Error::Parameter(format!(
            "Kendall's tau needs at least 2 observations, got {n_t}"
        )));
    }
    let total = n_t * (n_t - 1) / 2;

    let (chunks, subsampled) = match subsample {
        None => (full_chunks(n_t), None),
        Some(Subsample { pairs, rng }) => {
            if pairs == 0 {
                return Err(Error::Parameter("subsample size must be at least 1".into()));
            }
            let pairs = pairs.min(total);
            (sampled_chunks(n_t, total, pairs, rng), Some(pairs))
        }
    };

    let partials: Vec<(DMatrix<f64>, usize)> = chunks
        .par_iter()
        .map(|chunk| chunk_sum(series, side, chunk.anchor, &chunk.partners))
        .collect();

    let dim = side.dim(series.p1(), series.p2());
    let mut acc = DMatrix::<f64>::zeros(dim, dim);
    let mut used = 0;
    for (m, n) in &partials {
        acc += m;
        used += n;
    }
    if used == 0 {
        return Err(Error::Degenerate(
            "every pair of observations is tied; Kendall's tau is undefined".into(),
        ));
    }
    acc /= used as f64;
    symmetrize(&mut acc);
    Ok(KendallTau {
        side,
        mat: acc,
        pairs_used: used,
        subsampled,
    })
}

struct Chunk {
    anchor: usize,
    partners: Vec<usize>,
}

fn full_chunks(n_t: usize) -> Vec<Chunk> {
    let mut out = Vec::new();
    for t in 0..n_t - 1 {
        let partners: Vec<usize> = (t + 1..n_t).collect();
        for block in partners.chunks(PAIR_BLOCK) {
            out.push(Chunk {
                anchor: t,
                partners: block.to_vec(),
            });
        }
    }
    out
}

fn sampled_chunks(n_t: usize, total: usize, pairs: usize, rng: &mut SimRng) -> Vec<Chunk> {
    let mut picked = index::sample(rng, total, pairs).into_vec();
    picked.sort_unstable();
    // pair index k enumerates (t, s), t < s, in row-major order
    let mut out: Vec<Chunk> = Vec::new();
    let mut t = 0;
    let mut row_start = 0;
    for k in picked {
        while k >= row_start + (n_t - 1 - t) {
            row_start += n_t - 1 - t;
            t += 1;
        }
        let s = t + 1 + (k - row_start);
        match out.last_mut() {
            Some(c) if c.anchor == t && c.partners.len() < PAIR_BLOCK => c.partners.push(s),
            _ => out.push(Chunk {
                anchor: t,
                partners: vec![s],
            }),
        }
    }
    out
}

/// Sum of kernels for `(anchor, s)` over `partners`, as one stacked product.
fn chunk_sum(series: &MatrixSeries, side: Side, anchor: usize, partners: &[usize]) -> (DMatrix<f64>, usize) {
    let (p1, p2) = (series.p1(), series.p2());
    let x = series.get(anchor);
    let diffs: Vec<DMatrix<f64>> = partners
        .iter()
        .filter_map(|&s| {
            let d = x - series.get(s);
            let norm2 = d.norm_squared();
            (norm2 > 0.0).then(|| d / norm2.sqrt())
        })
        .collect();
    let used = diffs.len();
    let dim = side.dim(p1, p2);
    if used == 0 {
        return (DMatrix::zeros(dim, dim), 0);
    }
    let sum = match side {
        Side::Row => {
            // [D_1 D_2 ...] [D_1 D_2 ...]^T = sum D_i D_i^T
            let mut stacked = DMatrix::<f64>::zeros(p1, used * p2);
            for (i, d) in diffs.iter().enumerate() {
                stacked.columns_mut(i * p2, p2).copy_from(d);
            }
            &stacked * stacked.transpose()
        }
        Side::Column => {
            let mut stacked = DMatrix::<f64>::zeros(used * p1, p2);
            for (i, d) in diffs.iter().enumerate() {
                stacked.rows_mut(i * p1, p1).copy_from(d);
            }
            stacked.transpose() * &stacked
        }
    };
    (sum, used)
}

fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in 0..i {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

/// Separable elliptical law `E(0, Σ ⊗ Ω)` with a normal or t radial part.
#[derive(Debug, Clone)]
pub struct EllipticalLaw {
    pub sigma: DMatrix<f64>,
    pub omega: DMatrix<f64>,
    pub dist: Dist,
}

/// Monte-Carlo estimate of the population Kendall's tau of `law`, averaging
/// the kernel over `n_pairs` independent pairs of draws.
pub fn population_kendall_mc(
    law: &EllipticalLaw,
    side: Side,
    n_pairs: usize,
    rng: &mut SimRng,
) -> Result<KendallTau> {
    if n_pairs == 0 {
        return Err(Error::Parameter("n_pairs must be at least 1".into()));
    }
    law.dist.validate()?;
    let normal = MatrixNormal::new_psd(&law.sigma, &law.omega)?;
    let (p1, p2) = normal.shape();
    let dim = side.dim(p1, p2);
    let mut acc = DMatrix::<f64>::zeros(dim, dim);
    let mut used = 0;
    for _ in 0..n_pairs {
        let y = normal.sample(rng) * law.dist.mixing_scale(rng);
        let yp = normal.sample(rng) * law.dist.mixing_scale(rng);
        match pair_kernel(&y, &yp, side) {
            Ok(k) => {
                acc += k;
                used += 1;
            }
            Err(Error::Degenerate(_)) => {}
            Err(e) => return Err(e),
        }
    }
    if used == 0 {
        return Err(Error::Degenerate("all sampled pairs were tied".into()));
    }
    acc /= used as f64;
    symmetrize(&mut acc);
    Ok(KendallTau {
        side,
        mat: acc,
        pairs_used: used,
        subsampled: None,
    })
}

/// Uniform draw from the orthogonal group (QR of a Gaussian matrix with the
/// sign of `diag(R)` absorbed).
pub fn random_orthogonal(n: usize, rng: &mut SimRng) -> DMatrix<f64> {
    let g = DMatrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(rand_distr::StandardNormal));
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..n {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}
