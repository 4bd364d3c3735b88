//! Rotation-invariant evaluation metrics.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::series::MatrixSeries;

const GRAM_TOL: f64 = 1e-8;
const RANK_TOL: f64 = 1e-10;

/// Orthonormal basis of the column space of `q` (Householder QR without
/// pivoting); returned unchanged when `q` already has orthonormal columns.
pub fn orthonormalize(q: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let (p, k) = q.shape();
    if k == 0 || p < k {
        return Err(Error::Validation(format!(
            "a {p}x{k} matrix cannot have full column rank"
        )));
    }
    if q.iter().any(|v| !v.is_finite()) {
        return Err(Error::Validation("basis has non-finite entries".into()));
    }
    let gram = q.transpose() * q;
    if (gram - DMatrix::<f64>::identity(k, k)).amax() <= GRAM_TOL {
        return Ok(q.clone());
    }
    let scale = q.column_iter().map(|c| c.norm()).fold(0.0, f64::max);
    let qr = q.clone().qr();
    let r = qr.r();
    for j in 0..k {
        if !(r[(j, j)].abs() > RANK_TOL * scale) {
            return Err(Error::Validation(format!(
                "basis is rank deficient (column {j} is dependent on the previous ones)"
            )));
        }
    }
    Ok(qr.q())
}

/// `sqrt(1 - tr(Q1 Q1^T Q2 Q2^T) / max(q1, q2))` on orthonormalized inputs,
/// clamped into `[0, 1]`.
pub fn subspace_distance(q1: &DMatrix<f64>, q2: &DMatrix<f64>) -> Result<f64> {
    if q1.nrows() != q2.nrows() {
        return Err(Error::Parameter(format!(
            "bases live in different spaces ({} vs {} rows)",
            q1.nrows(),
            q2.nrows()
        )));
    }
    let a = orthonormalize(q1)?;
    let b = orthonormalize(q2)?;
    let overlap = (a.transpose() * b).norm_squared();
    let k = q1.ncols().max(q2.ncols()) as f64;
    Ok((1.0 - overlap / k).clamp(0.0, 1.0).sqrt())
}

fn check_same_dims(a: &MatrixSeries, b: &MatrixSeries) -> Result<()> {
    if a.dims() != b.dims() {
        return Err(Error::Parameter(format!(
            "series dimensions differ: {:?} vs {:?}",
            a.dims(),
            b.dims()
        )));
    }
    Ok(())
}

fn total_sq_diff(a: &MatrixSeries, b: &MatrixSeries) -> f64 {
    a.slices()
        .iter()
        .zip(b.slices())
        .map(|(x, y)| (x - y).norm_squared())
        .sum()
}

/// `(1/(T p1 p2)) Σ_t ||est_t - truth_t||_F^2`.
pub fn mse_common(est: &MatrixSeries, truth: &MatrixSeries) -> Result<f64> {
    check_same_dims(est, truth)?;
    let (n_t, p1, p2) = est.dims();
    Ok(total_sq_diff(est, truth) / (n_t * p1 * p2) as f64)
}

/// Mean squared pricing error and unexplained proportion of variance over a
/// test block, `(MSE, ρ)`; `ρ` is relative to the block's own mean matrix.
pub fn pricing_errors(actual: &MatrixSeries, fitted: &MatrixSeries) -> Result<(f64, f64)> {
    check_same_dims(actual, fitted)?;
    let (n_t, p1, p2) = actual.dims();
    let resid = total_sq_diff(actual, fitted);
    let mean = actual.mean();
    let spread: f64 = actual
        .slices()
        .iter()
        .map(|y| (y - &mean).norm_squared())
        .sum();
    if spread == 0.0 {
        return Err(Error::Degenerate(
            "test block is constant; unexplained variance ratio is undefined".into(),
        ));
    }
    Ok((resid / (n_t * p1 * p2) as f64, resid / spread))
}

/// Distance between the Kronecker loading spaces `Ĉ ⊗ R̂` of two windows.
pub fn loading_variation(
    r_prev: &DMatrix<f64>,
    c_prev: &DMatrix<f64>,
    r_curr: &DMatrix<f64>,
    c_curr: &DMatrix<f64>,
) -> Result<f64> {
    if r_prev.nrows() != r_curr.nrows() || c_prev.nrows() != c_curr.nrows() {
        return Err(Error::Parameter(
            "loading shapes differ between windows".into(),
        ));
    }
    subspace_distance(&c_curr.kronecker(r_curr), &c_prev.kronecker(r_prev))
}

/// Per-entry error of factor scores against true factors mapped into the
/// estimated coordinates: `F̂_t` is compared with `H_R F_t H_C^T`, where
/// `H_R = R̂^T R / p1` and `H_C = Ĉ^T C / p2`. Invariant under rotations of
/// the estimated loadings.
pub fn factor_mse(
    factors_hat: &[DMatrix<f64>],
    r_hat: &DMatrix<f64>,
    c_hat: &DMatrix<f64>,
    factors: &[DMatrix<f64>],
    r: &DMatrix<f64>,
    c: &DMatrix<f64>,
) -> Result<f64> {
    if factors_hat.len() != factors.len() || factors.is_empty() {
        return Err(Error::Parameter("factor sequences differ in length".into()));
    }
    if r_hat.nrows() != r.nrows() || c_hat.nrows() != c.nrows() {
        return Err(Error::Parameter("loading dimensions differ".into()));
    }
    let h_r = r_hat.transpose() * r / r.nrows() as f64;
    let h_c_t = c.transpose() * c_hat / c.nrows() as f64;
    let mut total = 0.0;
    for (fh, f) in factors_hat.iter().zip(factors) {
        let mapped = &h_r * f * &h_c_t;
        if mapped.shape() != fh.shape() {
            return Err(Error::Parameter("factor shapes differ".into()));
        }
        total += (fh - mapped).norm_squared();
    }
    let (k1, k2) = (r_hat.ncols(), c_hat.ncols());
    Ok(total / (factors.len() * k1 * k2) as f64)
}
