use serde::{Deserialize, Serialize};

use super::{axpy, dot, norm, thin_qr, DenseMatrix, LinalgError, Result};

const MAX_SWEEPS: usize = 80;

/// How a factorization was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum SvdMethod {
    Economy,
    Randomized {
        target_rank: usize,
        oversampling: usize,
        power_iterations: usize,
    },
}

/// `x ≈ u · diag(sigma) · vt` with orthonormal columns in `u`, orthonormal
/// rows in `vt` and `sigma` sorted nonincreasing.
#[derive(Debug, Clone, PartialEq)]
pub struct SvdFactorization {
    u: DenseMatrix,
    sigma: Vec<f64>,
    vt: DenseMatrix,
    method: SvdMethod,
}

impl SvdFactorization {
    pub(crate) fn new(u: DenseMatrix, sigma: Vec<f64>, vt: DenseMatrix, method: SvdMethod) -> Self {
        debug_assert_eq!(u.cols(), sigma.len());
        debug_assert_eq!(vt.rows(), sigma.len());
        SvdFactorization { u, sigma, vt, method }
    }

    pub fn u(&self) -> &DenseMatrix {
        &self.u
    }

    pub fn sigma(&self) -> &[f64] {
        &self.sigma
    }

    pub fn vt(&self) -> &DenseMatrix {
        &self.vt
    }

    pub fn method(&self) -> SvdMethod {
        self.method
    }

    /// Number of singular triplets held.
    pub fn rank(&self) -> usize {
        self.sigma.len()
    }

    /// `u_r · diag(sigma_r) · vt_r` using the leading `r` triplets.
    pub fn reconstruct(&self, r: usize) -> Result<DenseMatrix> {
        if r > self.rank() {
            return Err(LinalgError::Dimension(format!(
                "rank {r} exceeds the {} stored triplets",
                self.rank()
            )));
        }
        let mut us = self.u.leading_columns(r);
        us.scale_columns(&self.sigma[..r]);
        us.matmul(&self.vt.leading_rows(r))
    }
}

/// Thin SVD with `q = min(rows, cols)` triplets.
///
/// Tall inputs are reduced to their triangular factor by Householder QR,
/// which is then diagonalized by one-sided (Hestenes) Jacobi rotations.
/// Wide inputs are handled through the transpose.
pub fn economy_svd(x: &DenseMatrix) -> Result<SvdFactorization> {
    if x.is_empty() {
        return Err(LinalgError::Dimension(format!(
            "cannot factor an empty {}x{} matrix",
            x.rows(),
            x.cols()
        )));
    }
    x.check_finite()?;

    let (u, sigma, v) = if x.rows() >= x.cols() {
        tall_svd(x)?
    } else {
        // xᵀ = U' Σ V'ᵀ  =>  x = V' Σ U'ᵀ
        let (u_t, sigma, v_t) = tall_svd(&x.transpose())?;
        (v_t, sigma, u_t)
    };
    Ok(finish(u, sigma, v, SvdMethod::Economy))
}

/// Sorts, fixes signs and completes the basis for zero singular values.
/// `v` holds right singular vectors as columns.
pub(crate) fn finish(
    mut u: DenseMatrix,
    mut sigma: Vec<f64>,
    mut v: DenseMatrix,
    method: SvdMethod,
) -> SvdFactorization {
    let q = sigma.len();
    let mut order: Vec<usize> = (0..q).collect();
    order.sort_by(|&a, &b| sigma[b].total_cmp(&sigma[a]).then(a.cmp(&b)));
    if order.iter().enumerate().any(|(i, &o)| i != o) {
        u = u.select_columns(&order);
        v = v.select_columns(&order);
        sigma = order.iter().map(|&i| sigma[i]).collect();
    }

    let largest = sigma.first().copied().unwrap_or(0.0);
    let negligible = largest * f64::EPSILON * 1e-3;
    let first_null = sigma
        .iter()
        .position(|&s| s <= negligible || s < f64::MIN_POSITIVE.sqrt())
        .unwrap_or(q);
    for s in &mut sigma[first_null..] {
        *s = 0.0;
    }
    complete_basis(&mut u, first_null);
    complete_basis(&mut v, first_null);

    for j in 0..q {
        let col = u.column(j);
        let mut pivot = 0;
        for (i, val) in col.iter().enumerate() {
            if val.abs() > col[pivot].abs() {
                pivot = i;
            }
        }
        if col[pivot] < 0.0 {
            for val in u.column_mut(j) {
                *val = -*val;
            }
            for val in v.column_mut(j) {
                *val = -*val;
            }
        }
    }
    SvdFactorization::new(u, sigma, v.transpose(), method)
}

/// Replaces columns `start..` with unit vectors orthogonalized against all
/// preceding columns (two Gram-Schmidt passes).
fn complete_basis(m: &mut DenseMatrix, start: usize) {
    let (rows, cols) = (m.rows(), m.cols());
    for j in start..cols {
        let mut best: Option<(f64, Vec<f64>)> = None;
        for e in 0..rows {
            let mut cand = vec![0.0; rows];
            cand[e] = 1.0;
            for _ in 0..2 {
                for k in 0..j {
                    let d = dot(m.column(k), &cand);
                    axpy(-d, m.column(k), &mut cand);
                }
            }
            let n = norm(&cand);
            if best.as_ref().is_none_or(|(b, _)| n > *b) {
                best = Some((n, cand));
            }
            if n > 0.5 {
                break;
            }
        }
        if let Some((n, mut cand)) = best {
            for c in cand.iter_mut() {
                *c /= n;
            }
            m.column_mut(j).copy_from_slice(&cand);
        }
    }
}

/// SVD of a tall matrix, returning (U, sigma, V) in Jacobi order.
fn tall_svd(x: &DenseMatrix) -> Result<(DenseMatrix, Vec<f64>, DenseMatrix)> {
    let n = x.cols();
    if x.rows() > n {
        let q = thin_qr(x)?;
        let r = q.tr_matmul(x)?;
        let (ur, sigma, v) = jacobi(r);
        Ok((q.matmul(&ur)?, sigma, v))
    } else {
        Ok(jacobi(x.clone()))
    }
}

/// One-sided Jacobi on the columns of `a` (rows >= cols).
fn jacobi(mut a: DenseMatrix) -> (DenseMatrix, Vec<f64>, DenseMatrix) {
    let (m, n) = (a.rows(), a.cols());
    let mut v = DenseMatrix::identity(n);
    let tol = f64::EPSILON * (m as f64).max(1.0);
    let mut sq: Vec<f64> = (0..n).map(|j| dot(a.column(j), a.column(j))).collect();

    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha = sq[p];
                let beta = sq[q];
                if alpha == 0.0 || beta == 0.0 {
                    continue;
                }
                let gamma = dot(a.column(p), a.column(q));
                if gamma.abs() <= tol * alpha.sqrt() * beta.sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate(&mut a, p, q, c, s);
                rotate(&mut v, p, q, c, s);
                sq[p] = dot(a.column(p), a.column(p));
                sq[q] = dot(a.column(q), a.column(q));
            }
        }
        if !rotated {
            break;
        }
    }

    let sigma: Vec<f64> = (0..n).map(|j| norm(a.column(j))).collect();
    for (j, &s) in sigma.iter().enumerate() {
        if s > 0.0 {
            for val in a.column_mut(j) {
                *val /= s;
            }
        }
    }
    (a, sigma, v)
}

/// Columns p, q ← (c·p − s·q, s·p + c·q).
fn rotate(m: &mut DenseMatrix, p: usize, q: usize, c: f64, s: f64) {
    let rows = m.rows();
    let (lo, hi) = m.as_mut_slice().split_at_mut(q * rows);
    let cp = &mut lo[p * rows..(p + 1) * rows];
    let cq = &mut hi[..rows];
    for (x, y) in cp.iter_mut().zip(cq.iter_mut()) {
        let (xp, xq) = (*x, *y);
        *x = c * xp - s * xq;
        *y = s * xp + c * xq;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(rows: usize, cols: usize, seed: u64) -> DenseMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DenseMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
    }

    fn orthonormality_defect(m: &DenseMatrix) -> f64 {
        let g = m.tr_matmul(m).unwrap();
        g.sub(&DenseMatrix::identity(m.cols())).unwrap().max_abs()
    }

    #[test]
    fn identity_has_unit_spectrum() {
        let f = economy_svd(&DenseMatrix::identity(2)).unwrap();
        assert_eq!(f.sigma(), &[1.0, 1.0]);
        let uv = f.u().matmul(f.vt()).unwrap();
        assert!(orthonormality_defect(&uv) < 1e-15);
    }

    #[test]
    fn diagonal_spectrum_is_sorted() {
        let f = economy_svd(&DenseMatrix::from_diagonal(&[1.0, 3.0])).unwrap();
        assert!((f.sigma()[0] - 3.0).abs() < 1e-15);
        assert!((f.sigma()[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn reconstructs_random_matrices() {
        for (rows, cols, seed) in [(50, 20, 1), (20, 50, 2), (1, 7, 3), (9, 1, 4), (30, 30, 5)] {
            let x = random(rows, cols, seed);
            let f = economy_svd(&x).unwrap();
            assert_eq!(f.rank(), rows.min(cols));
            let err = x.sub(&f.reconstruct(f.rank()).unwrap()).unwrap().frobenius_norm();
            assert!(err / x.frobenius_norm() <= 1e-12, "{rows}x{cols}: {err}");
            assert!(orthonormality_defect(f.u()) <= 1e-12);
            assert!(orthonormality_defect(&f.vt().transpose()) <= 1e-12);
            assert!(f.sigma().windows(2).all(|w| w[0] >= w[1]));
        }
    }

    #[test]
    fn zero_matrix_gets_an_orthonormal_basis() {
        let f = economy_svd(&DenseMatrix::zeros(6, 3)).unwrap();
        assert_eq!(f.sigma(), &[0.0, 0.0, 0.0]);
        assert!(orthonormality_defect(f.u()) < 1e-15);
        assert!(orthonormality_defect(&f.vt().transpose()) < 1e-15);
    }

    #[test]
    fn sign_convention_makes_largest_entry_nonnegative() {
        let x = random(12, 5, 11);
        let f = economy_svd(&x).unwrap();
        for col in f.u().columns() {
            let big = col.iter().copied().fold(0.0f64, |m, v| if v.abs() > m.abs() { v } else { m });
            assert!(big >= 0.0);
        }
    }

    #[test]
    fn errors() {
        assert!(matches!(
            economy_svd(&DenseMatrix::zeros(0, 3)),
            Err(LinalgError::Dimension(_))
        ));
        let mut x = DenseMatrix::zeros(2, 2);
        x.set(0, 1, f64::INFINITY);
        assert!(matches!(economy_svd(&x), Err(LinalgError::NonFinite { .. })));
    }
}
