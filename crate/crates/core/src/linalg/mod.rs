//! Dense column-major matrices and the SVD machinery built on them.
//!
//! Every column of a data matrix is one flattened image, so the storage
//! order is column-major and most kernels here walk whole columns.

mod qr;
mod reduce;
mod rsvd;
mod spectrum;
mod svd;

pub use qr::thin_qr;
pub use reduce::{project, truncate_and_project, ReducedFeatures};
pub use rsvd::{randomized_svd, RsvdParams};
pub use spectrum::{cumulative_energy, normalized_singular_values};
pub use svd::{economy_svd, SvdFactorization, SvdMethod};

use rayon::prelude::*;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("dimension error: {0}")]
    Dimension(String),
    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
    #[error("degenerate spectrum: all singular values are zero")]
    DegenerateSpectrum,
}

pub type Result<T> = std::result::Result<T, LinalgError>;

const BLOCK_ROWS: usize = 256;
const BLOCK_COLS: usize = 8;

/// Real matrix stored column by column.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseMatrix {
            rows,
            cols,
            values: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    /// Wraps column-major storage. Fails if the length does not match the shape.
    pub fn from_col_major(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self> {
        if rows * cols != values.len() {
            return Err(LinalgError::Dimension(format!(
                "{rows}x{cols} matrix needs {} values, got {}",
                rows * cols,
                values.len()
            )));
        }
        Ok(DenseMatrix { rows, cols, values })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut values = Vec::with_capacity(rows * cols);
        for j in 0..cols {
            for i in 0..rows {
                values.push(f(i, j));
            }
        }
        DenseMatrix { rows, cols, values }
    }

    /// Builds a matrix from equally long columns.
    pub fn from_columns<C: AsRef<[f64]>>(columns: &[C]) -> Result<Self> {
        let rows = columns.first().map(|c| c.as_ref().len()).unwrap_or(0);
        let mut values = Vec::with_capacity(rows * columns.len());
        for (j, c) in columns.iter().enumerate() {
            let c = c.as_ref();
            if c.len() != rows {
                return Err(LinalgError::Dimension(format!(
                    "column {j} has length {}, expected {rows}",
                    c.len()
                )));
            }
            values.extend_from_slice(c);
        }
        Ok(DenseMatrix {
            rows,
            cols: columns.len(),
            values,
        })
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m.set(i, i, d);
        }
        m
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.rows == 0 || self.cols == 0
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[j * self.rows + i]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.values[j * self.rows + i] = v;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn column(&self, j: usize) -> &[f64] {
        &self.values[j * self.rows..(j + 1) * self.rows]
    }

    #[inline]
    pub fn column_mut(&mut self, j: usize) -> &mut [f64] {
        &mut self.values[j * self.rows..(j + 1) * self.rows]
    }

    pub fn columns(&self) -> impl Iterator<Item = &[f64]> {
        // chunks_exact panics on a zero chunk size
        let step = self.rows.max(1);
        self.values.chunks_exact(step).take(self.cols)
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        (0..self.cols).map(|j| self.get(i, j)).collect()
    }

    /// Errors with the position of the first NaN or infinity.
    pub fn check_finite(&self) -> Result<()> {
        match self.values.iter().position(|v| !v.is_finite()) {
            Some(k) => Err(LinalgError::NonFinite {
                row: k % self.rows,
                col: k / self.rows,
            }),
            None => Ok(()),
        }
    }

    pub fn transpose(&self) -> DenseMatrix {
        DenseMatrix::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }

    /// Copy of the listed columns, in order.
    pub fn select_columns(&self, idx: &[usize]) -> DenseMatrix {
        let mut values = Vec::with_capacity(self.rows * idx.len());
        for &j in idx {
            values.extend_from_slice(self.column(j));
        }
        DenseMatrix {
            rows: self.rows,
            cols: idx.len(),
            values,
        }
    }

    pub fn leading_columns(&self, n: usize) -> DenseMatrix {
        DenseMatrix {
            rows: self.rows,
            cols: n,
            values: self.values[..n * self.rows].to_vec(),
        }
    }

    pub fn leading_rows(&self, n: usize) -> DenseMatrix {
        DenseMatrix::from_fn(n, self.cols, |i, j| self.get(i, j))
    }

    /// `self · rhs`.
    pub fn matmul(&self, rhs: &DenseMatrix) -> Result<DenseMatrix> {
        if self.cols != rhs.rows {
            return Err(LinalgError::Dimension(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let (m, n) = (self.rows, rhs.cols);
        let mut out = DenseMatrix::zeros(m, n);
        if m == 0 || n == 0 {
            return Ok(out);
        }
        // Row blocks keep the output tile cache-resident while `self` is
        // streamed exactly once.
        let blocks: Vec<(usize, usize, Vec<f64>)> = (0..m.div_ceil(BLOCK_ROWS))
            .into_par_iter()
            .map(|b| {
                let r0 = b * BLOCK_ROWS;
                let r1 = (r0 + BLOCK_ROWS).min(m);
                let h = r1 - r0;
                let mut tile = vec![0.0; h * n];
                for k in 0..self.cols {
                    let src = &self.column(k)[r0..r1];
                    for j in 0..n {
                        let c = rhs.get(k, j);
                        if c != 0.0 {
                            axpy(c, src, &mut tile[j * h..(j + 1) * h]);
                        }
                    }
                }
                (r0, h, tile)
            })
            .collect();
        for (r0, h, tile) in blocks {
            for j in 0..n {
                out.column_mut(j)[r0..r0 + h].copy_from_slice(&tile[j * h..(j + 1) * h]);
            }
        }
        Ok(out)
    }

    /// `selfᵀ · rhs` without forming the transpose.
    pub fn tr_matmul(&self, rhs: &DenseMatrix) -> Result<DenseMatrix> {
        if self.rows != rhs.rows {
            return Err(LinalgError::Dimension(format!(
                "cannot multiply ({}x{})ᵀ by {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let (m, n) = (self.cols, rhs.cols);
        let mut out = DenseMatrix::zeros(m, n);
        if m == 0 || n == 0 {
            return Ok(out);
        }
        let blocks: Vec<(usize, usize, Vec<f64>)> = (0..m.div_ceil(BLOCK_COLS))
            .into_par_iter()
            .map(|b| {
                let i0 = b * BLOCK_COLS;
                let i1 = (i0 + BLOCK_COLS).min(m);
                let h = i1 - i0;
                let mut tile = vec![0.0; h * n];
                for j in 0..n {
                    let rc = rhs.column(j);
                    for i in i0..i1 {
                        tile[j * h + (i - i0)] = dot(self.column(i), rc);
                    }
                }
                (i0, h, tile)
            })
            .collect();
        for (i0, h, tile) in blocks {
            for j in 0..n {
                out.column_mut(j)[i0..i0 + h].copy_from_slice(&tile[j * h..(j + 1) * h]);
            }
        }
        Ok(out)
    }

    pub fn scale_columns(&mut self, factors: &[f64]) {
        for (j, &f) in factors.iter().enumerate().take(self.cols) {
            for v in self.column_mut(j) {
                *v *= f;
            }
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Elementwise `self - rhs`; shapes must agree.
    pub fn sub(&self, rhs: &DenseMatrix) -> Result<DenseMatrix> {
        if self.rows != rhs.rows || self.cols != rhs.cols {
            return Err(LinalgError::Dimension(format!(
                "cannot subtract {}x{} from {}x{}",
                rhs.rows, rhs.cols, self.rows, self.cols
            )));
        }
        let values = self
            .values
            .iter()
            .zip(&rhs.values)
            .map(|(a, b)| a - b)
            .collect();
        Ok(DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            values,
        })
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    // four accumulators let the compiler vectorize
    let mut acc = [0.0f64; 4];
    let chunks = a.len() / 4;
    for c in 0..chunks {
        let k = c * 4;
        acc[0] += a[k] * b[k];
        acc[1] += a[k + 1] * b[k + 1];
        acc[2] += a[k + 2] * b[k + 2];
        acc[3] += a[k + 3] * b[k + 3];
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for k in chunks * 4..a.len() {
        s += a[k] * b[k];
    }
    s
}

#[inline]
pub(crate) fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

#[inline]
pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shape_is_checked() {
        assert!(DenseMatrix::from_col_major(2, 3, vec![0.0; 5]).is_err());
        let a = DenseMatrix::zeros(2, 3);
        let b = DenseMatrix::zeros(2, 3);
        assert!(a.matmul(&b).is_err());
        assert!(a.tr_matmul(&b).is_ok());
    }

    #[test]
    fn products_agree_with_transpose() {
        let a = DenseMatrix::from_fn(5, 3, |i, j| (i as f64 + 1.0) * (j as f64 - 1.5));
        let b = DenseMatrix::from_fn(5, 4, |i, j| ((i * 7 + j * 3) % 5) as f64 - 2.0);
        let direct = a.transpose().matmul(&b).unwrap();
        let fused = a.tr_matmul(&b).unwrap();
        assert!(direct.sub(&fused).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn non_finite_is_located() {
        let mut a = DenseMatrix::zeros(3, 2);
        a.set(2, 1, f64::NAN);
        assert_eq!(a.check_finite(), Err(LinalgError::NonFinite { row: 2, col: 1 }));
    }
}
