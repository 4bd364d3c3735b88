//! Symmetric eigendecomposition with a fixed ordering and sign convention, and
//! the eigenvalue-ratio rank selector.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Eigenpairs sorted by non-increasing eigenvalue, vectors sign-normalized so
/// the largest-magnitude entry of each column is positive.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenDecomp {
    pub values: DVector<f64>,
    pub vectors: DMatrix<f64>,
}

impl EigenDecomp {
    /// First `k` eigenvectors as a `p x k` matrix.
    pub fn leading(&self, k: usize) -> DMatrix<f64> {
        self.vectors.columns(0, k).into_owned()
    }

    /// Gap `values[k-1] - values[k]`, or `+inf` when `k` is the full dimension.
    pub fn gap(&self, k: usize) -> f64 {
        if k == 0 || k >= self.values.len() {
            f64::INFINITY
        } else {
            self.values[k - 1] - self.values[k]
        }
    }
}

const SYMMETRY_TOL: f64 = 1e-8;

pub fn sym_eigen(mat: &DMatrix<f64>) -> Result<EigenDecomp> {
    let (n, m) = mat.shape();
    if n != m || n == 0 {
        return Err(Error::Validation(format!(
            "eigendecomposition needs a non-empty square matrix, got {n}x{m}"
        )));
    }
    if mat.iter().any(|v| !v.is_finite()) {
        return Err(Error::Validation("matrix has non-finite entries".into()));
    }
    let asym = (mat - mat.transpose()).amax();
    if asym > SYMMETRY_TOL {
        return Err(Error::Validation(format!(
            "matrix is not symmetric (max |A - A^T| = {asym:e})"
        )));
    }

    let sym = (mat + mat.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));

    let values = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut vectors = DMatrix::zeros(n, n);
    for (j, &i) in order.iter().enumerate() {
        let mut col = eig.eigenvectors.column(i).into_owned();
        let norm = col.norm();
        if norm > 0.0 {
            col /= norm;
        }
        let mut pivot = 0;
        for r in 1..n {
            if col[r].abs() > col[pivot].abs() {
                pivot = r;
            }
        }
        if col[pivot] < 0.0 {
            col.neg_mut();
        }
        vectors.set_column(j, &col);
    }
    Ok(EigenDecomp { values, vectors })
}

/// Output of the eigenvalue-ratio selector.
#[derive(Debug, Clone, PartialEq)]
pub struct RankSelection {
    pub k_hat: usize,
    /// `ratios[j-1] = (λ_j + cδ) / (λ_{j+1} + cδ)` for `j = 1..=kmax`.
    pub ratios: Vec<f64>,
    pub delta: f64,
    pub c: f64,
    pub epsilon: f64,
    pub kmax: usize,
}

/// Picks `argmax_{1<=j<=kmax} λ̃_j / λ̃_{j+1}` with `λ̃ = λ + c·delta`; ties go
/// to the smallest `j`. `epsilon` is only recorded.
pub fn ratio_rank(values: &[f64], kmax: usize, c: f64, delta: f64, epsilon: f64) -> Result<RankSelection> {
    if kmax == 0 {
        return Err(Error::Parameter("kmax must be at least 1".into()));
    }
    if kmax + 1 > values.len() {
        return Err(Error::Parameter(format!(
            "kmax = {kmax} needs at least {} eigenvalues, got {}",
            kmax + 1,
            values.len()
        )));
    }
    if !(c >= 0.0 && delta >= 0.0 && c.is_finite() && delta.is_finite()) {
        return Err(Error::Parameter(format!(
            "ridge constant and delta must be finite and non-negative (c = {c}, delta = {delta})"
        )));
    }
    if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::Parameter("eigenvalues must be finite and non-negative".into()));
    }
    if values.windows(2).any(|w| w[0] < w[1]) {
        return Err(Error::Parameter("eigenvalues must be non-increasing".into()));
    }

    let ridge = c * delta;
    let mut ratios = Vec::with_capacity(kmax);
    for j in 0..kmax {
        let den = values[j + 1] + ridge;
        if den == 0.0 {
            return Err(Error::Degenerate(format!(
                "eigenvalue {} is zero and no ridge is configured",
                j + 2
            )));
        }
        ratios.push((values[j] + ridge) / den);
    }
    let mut best = 0;
    for j in 1..kmax {
        if ratios[j] > ratios[best] {
            best = j;
        }
    }
    Ok(RankSelection {
        k_hat: best + 1,
        ratios,
        delta,
        c,
        epsilon,
        kmax,
    })
}

/// Replaces eigenvalues below `f64::EPSILON * λ_1` by that floor.
///
/// Spectra of rank-deficient matrices come back from the solver with entries
/// that are pure rounding noise, possibly negative; flooring them makes the
/// ratio selector see "numerically zero" as a single well-defined level.
pub fn floor_spectrum(values: &[f64]) -> Vec<f64> {
    let top = values.first().copied().unwrap_or(0.0).max(0.0);
    let floor = f64::EPSILON * top;
    values.iter().map(|&v| v.max(floor)).collect()
}
