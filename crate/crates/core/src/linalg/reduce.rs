use super::{DenseMatrix, LinalgError, Result, SvdFactorization};

/// Truncated modes and the coordinates of a data matrix in them.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedFeatures {
    basis: DenseMatrix,
    coords: DenseMatrix,
}

impl ReducedFeatures {
    pub fn new(basis: DenseMatrix, coords: DenseMatrix) -> Result<Self> {
        if basis.cols() == 0 || coords.rows() != basis.cols() {
            return Err(LinalgError::Dimension(format!(
                "coords with {} rows do not match a basis of {} modes",
                coords.rows(),
                basis.cols()
            )));
        }
        Ok(ReducedFeatures { basis, coords })
    }

    /// `n × r` modes.
    pub fn basis(&self) -> &DenseMatrix {
        &self.basis
    }

    /// `r × m` coordinates, one column per sample.
    pub fn coords(&self) -> &DenseMatrix {
        &self.coords
    }

    pub fn truncation_rank(&self) -> usize {
        self.basis.cols()
    }

    /// Same basis, new coordinates (e.g. after normalization).
    pub fn with_coords(&self, coords: DenseMatrix) -> Result<Self> {
        Self::new(self.basis.clone(), coords)
    }

    /// Projects other data (e.g. a test split) onto this basis.
    pub fn project(&self, x: &DenseMatrix) -> Result<ReducedFeatures> {
        Self::new(self.basis.clone(), project(&self.basis, x)?)
    }

    pub fn into_parts(self) -> (DenseMatrix, DenseMatrix) {
        (self.basis, self.coords)
    }
}

/// `basisᵀ · x`.
pub fn project(basis: &DenseMatrix, x: &DenseMatrix) -> Result<DenseMatrix> {
    if basis.rows() != x.rows() {
        return Err(LinalgError::Dimension(format!(
            "data has {} rows but the basis has {}",
            x.rows(),
            basis.rows()
        )));
    }
    basis.tr_matmul(x)
}

/// Keeps the leading `r` left singular vectors and projects `x` onto them.
pub fn truncate_and_project(fac: &SvdFactorization, x: &DenseMatrix, r: usize) -> Result<ReducedFeatures> {
    if r == 0 || r > fac.rank() {
        return Err(LinalgError::Dimension(format!(
            "truncation rank {r} outside 1..={}",
            fac.rank()
        )));
    }
    let basis = fac.u().leading_columns(r);
    let coords = project(&basis, x)?;
    ReducedFeatures::new(basis, coords)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::economy_svd;

    #[test]
    fn complete_basis_reconstructs() {
        let x = DenseMatrix::from_fn(6, 4, |i, j| ((i * 3 + j) as f64).cos());
        let fac = economy_svd(&x).unwrap();
        let red = truncate_and_project(&fac, &x, 4).unwrap();
        let back = red.basis().matmul(red.coords()).unwrap();
        assert!(x.sub(&back).unwrap().max_abs() <= 1e-10);
    }

    #[test]
    fn shapes_and_errors() {
        let x = DenseMatrix::from_diagonal(&[3.0, 1.0]);
        let fac = economy_svd(&x).unwrap();
        let red = truncate_and_project(&fac, &x, 1).unwrap();
        assert_eq!((red.coords().rows(), red.coords().cols()), (1, 2));
        assert!(truncate_and_project(&fac, &x, 0).is_err());
        assert!(truncate_and_project(&fac, &x, 3).is_err());
        assert!(truncate_and_project(&fac, &DenseMatrix::zeros(3, 2), 1).is_err());
    }

    #[test]
    fn test_column_equal_to_training_column() {
        let x = DenseMatrix::from_fn(8, 5, |i, j| ((i + 1) * (j + 2)) as f64 % 7.0);
        let fac = economy_svd(&x).unwrap();
        let red = truncate_and_project(&fac, &x, 3).unwrap();
        let held_out = x.select_columns(&[2]);
        let again = red.project(&held_out).unwrap();
        for i in 0..3 {
            assert!((again.coords().get(i, 0) - red.coords().get(i, 2)).abs() <= 1e-12);
        }
    }
}
