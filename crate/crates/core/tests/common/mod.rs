//! Shared helpers for the integration tests.

#![allow(dead_code)]

use mkfactor::rng::SimRng;
use mkfactor::{MatrixSeries, Side};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> SimRng {
    SimRng::seed_from_u64(seed)
}

pub fn gaussian(p1: usize, p2: usize, rng: &mut SimRng) -> DMatrix<f64> {
    DMatrix::from_fn(p1, p2, |_, _| rng.sample::<f64, _>(StandardNormal))
}

/// Gaussian series; with `heavy`, every slice gets a Cauchy-type scale.
pub fn random_series(t: usize, p1: usize, p2: usize, heavy: bool, rng: &mut SimRng) -> MatrixSeries {
    let slices = (0..t)
        .map(|_| {
            let m = gaussian(p1, p2, rng);
            if heavy {
                let z: f64 = rng.sample(StandardNormal);
                m / z.abs().max(1e-3)
            } else {
                m
            }
        })
        .collect();
    MatrixSeries::new(slices).unwrap()
}

/// Plain double loop over all pairs, written independently of the library.
pub fn naive_kendall(series: &MatrixSeries, side: Side) -> DMatrix<f64> {
    let xs = series.slices();
    let dim = match side {
        Side::Row => series.p1(),
        Side::Column => series.p2(),
    };
    let mut acc = DMatrix::zeros(dim, dim);
    let mut n = 0usize;
    for i in 0..xs.len() {
        for j in (i + 1)..xs.len() {
            let d = &xs[i] - &xs[j];
            let mut norm2 = 0.0;
            for v in d.iter() {
                norm2 += v * v;
            }
            if norm2 == 0.0 {
                continue;
            }
            for a in 0..dim {
                for b in 0..dim {
                    let mut s = 0.0;
                    match side {
                        Side::Row => {
                            for c in 0..d.ncols() {
                                s += d[(a, c)] * d[(b, c)];
                            }
                        }
                        Side::Column => {
                            for r in 0..d.nrows() {
                                s += d[(r, a)] * d[(r, b)];
                            }
                        }
                    }
                    acc[(a, b)] += s / norm2;
                }
            }
            n += 1;
        }
    }
    acc / n as f64
}

/// Multivariate Kendall's tau of a vector sample.
pub fn vector_kendall(xs: &[DVector<f64>]) -> DMatrix<f64> {
    let p = xs[0].len();
    let mut acc = DMatrix::zeros(p, p);
    let mut n = 0usize;
    for i in 0..xs.len() {
        for j in (i + 1)..xs.len() {
            let d = &xs[i] - &xs[j];
            acc += &d * d.transpose() / d.norm_squared();
            n += 1;
        }
    }
    acc / n as f64
}

pub fn max_abs_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
