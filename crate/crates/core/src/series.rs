//! Time-indexed stacks of equally shaped real matrices.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// `T` observations of a `p1 x p2` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixSeries {
    rows: usize,
    cols: usize,
    slices: Vec<DMatrix<f64>>,
}

impl MatrixSeries {
    /// Builds a series, checking that shapes agree and every entry is finite.
    pub fn new(slices: Vec<DMatrix<f64>>) -> Result<Self> {
        let first = slices
            .first()
            .ok_or_else(|| Error::Parameter("a series needs at least one time point".into()))?;
        let (rows, cols) = first.shape();
        if rows == 0 || cols == 0 {
            return Err(Error::Parameter("matrix dimensions must be at least 1".into()));
        }
        for (t, m) in slices.iter().enumerate() {
            if m.shape() != (rows, cols) {
                return Err(Error::Parameter(format!(
                    "slice {t} has shape {:?}, expected {:?}",
                    m.shape(),
                    (rows, cols)
                )));
            }
            if let Some(idx) = m.iter().position(|v| !v.is_finite()) {
                // column-major storage
                let (r, c) = (idx % rows, idx / rows);
                return Err(Error::Validation(format!(
                    "non-finite value at (t={t}, row={r}, col={c})"
                )));
            }
        }
        Ok(MatrixSeries { rows, cols, slices })
    }

    /// Wraps a single matrix as a series of length one.
    pub fn single(m: DMatrix<f64>) -> Result<Self> {
        Self::new(vec![m])
    }

    pub fn len(&self) -> usize {
        self.slices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slices.is_empty()
    }

    pub fn p1(&self) -> usize {
        self.rows
    }

    pub fn p2(&self) -> usize {
        self.cols
    }

    /// `(T, p1, p2)`.
    pub fn dims(&self) -> (usize, usize, usize) {
        (self.len(), self.rows, self.cols)
    }

    pub fn slices(&self) -> &[DMatrix<f64>] {
        &self.slices
    }

    pub fn get(&self, t: usize) -> &DMatrix<f64> {
        &self.slices[t]
    }

    pub fn into_slices(self) -> Vec<DMatrix<f64>> {
        self.slices
    }

    /// Contiguous sub-range `[start, end)` of time points.
    pub fn window(&self, start: usize, end: usize) -> Result<Self> {
        if start >= end || end > self.len() {
            return Err(Error::Parameter(format!(
                "window [{start}, {end}) outside series of length {}",
                self.len()
            )));
        }
        Ok(MatrixSeries {
            rows: self.rows,
            cols: self.cols,
            slices: self.slices[start..end].to_vec(),
        })
    }

    /// Applies `f` to every slice. The result must keep all entries finite.
    pub fn map<F>(&self, f: F) -> Result<Self>
    where
        F: FnMut(&DMatrix<f64>) -> DMatrix<f64>,
    {
        Self::new(self.slices.iter().map(f).collect())
    }

    /// Entries in (t, row-major) order.
    pub fn row_major_values(&self) -> impl Iterator<Item = f64> + '_ {
        self.slices.iter().flat_map(move |m| {
            (0..self.rows).flat_map(move |r| (0..self.cols).map(move |c| m[(r, c)]))
        })
    }

    /// Temporal mean matrix.
    pub fn mean(&self) -> DMatrix<f64> {
        let mut acc = DMatrix::zeros(self.rows, self.cols);
        for m in &self.slices {
            acc += m;
        }
        acc / self.len() as f64
    }
}
