use super::{ClassifyError, FeatureMatrix, Result};
use crate::class::{argmax_lowest, PatternClass};
use crate::linalg::{dot, DenseMatrix};

/// Ridge added to the pooled covariance diagonal, relative to its mean variance.
const RIDGE: f64 = 1e-8;

/// Linear discriminant with a pooled within-class covariance.
///
/// Score of class c: `xᵀΣ⁻¹μ_c − ½ μ_cᵀΣ⁻¹μ_c + ln π_c`.
#[derive(Debug, Clone, PartialEq)]
pub struct LdaModel {
    means: [Vec<f64>; 3],
    cov_inv: DenseMatrix,
    log_priors: [f64; 3],
    // derived from the three fields above
    weights: [Vec<f64>; 3],
    offsets: [f64; 3],
}

/// Lower Cholesky factor, or `None` if the matrix is not positive definite.
fn cholesky(a: &DenseMatrix) -> Option<DenseMatrix> {
    let n = a.rows();
    let mut l = DenseMatrix::zeros(n, n);
    for j in 0..n {
        let mut d = a.get(j, j);
        for k in 0..j {
            d -= l.get(j, k).powi(2);
        }
        if !(d > 0.0) {
            return None;
        }
        let d = d.sqrt();
        l.set(j, j, d);
        for i in j + 1..n {
            let mut s = a.get(i, j);
            for k in 0..j {
                s -= l.get(i, k) * l.get(j, k);
            }
            l.set(i, j, s / d);
        }
    }
    Some(l)
}

fn spd_inverse(a: &DenseMatrix) -> Option<DenseMatrix> {
    let l = cholesky(a)?;
    let n = a.rows();
    let mut inv = DenseMatrix::zeros(n, n);
    for c in 0..n {
        // L y = e_c, then Lᵀ x = y
        let mut y = vec![0.0; n];
        for i in 0..n {
            let mut s = if i == c { 1.0 } else { 0.0 };
            for k in 0..i {
                s -= l.get(i, k) * y[k];
            }
            y[i] = s / l.get(i, i);
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in i + 1..n {
                s -= l.get(k, i) * inv.get(k, c);
            }
            inv.set(i, c, s / l.get(i, i));
        }
    }
    // symmetrize away rounding asymmetry
    for i in 0..n {
        for j in i + 1..n {
            let v = 0.5 * (inv.get(i, j) + inv.get(j, i));
            inv.set(i, j, v);
            inv.set(j, i, v);
        }
    }
    Some(inv)
}

impl LdaModel {
    pub fn fit(f: &FeatureMatrix) -> Result<Self> {
        let r = f.features();
        let m = f.samples();
        let counts = f.class_counts();
        let present = counts.iter().filter(|&&c| c > 0).count();

        let mut means: [Vec<f64>; 3] = std::array::from_fn(|_| vec![0.0; r]);
        for j in 0..m {
            let c = f.labels()[j].index();
            for (acc, v) in means[c].iter_mut().zip(f.sample(j)) {
                *acc += v;
            }
        }
        for c in 0..3 {
            if counts[c] > 0 {
                for v in means[c].iter_mut() {
                    *v /= counts[c] as f64;
                }
            }
        }

        let mut cov = DenseMatrix::zeros(r, r);
        for j in 0..m {
            let mu = &means[f.labels()[j].index()];
            let d: Vec<f64> = f.sample(j).iter().zip(mu).map(|(x, u)| x - u).collect();
            for b in 0..r {
                for a in b..r {
                    let v = cov.get(a, b) + d[a] * d[b];
                    cov.set(a, b, v);
                }
            }
        }
        let dof = m.saturating_sub(present).max(1) as f64;
        for b in 0..r {
            for a in b..r {
                let v = cov.get(a, b) / dof;
                cov.set(a, b, v);
                cov.set(b, a, v);
            }
        }
        let trace: f64 = (0..r).map(|i| cov.get(i, i)).sum();
        let ridge = RIDGE * trace / r as f64;
        for i in 0..r {
            cov.set(i, i, cov.get(i, i) + ridge);
        }
        let cov_inv = spd_inverse(&cov).ok_or(ClassifyError::SingularCovariance)?;

        let log_priors = counts.map(|n| {
            if n == 0 {
                f64::NEG_INFINITY
            } else {
                (n as f64 / m as f64).ln()
            }
        });
        Ok(Self::from_parts(means, cov_inv, log_priors))
    }

    pub(crate) fn from_parts(means: [Vec<f64>; 3], cov_inv: DenseMatrix, log_priors: [f64; 3]) -> Self {
        let weights: [Vec<f64>; 3] = std::array::from_fn(|c| {
            (0..cov_inv.rows())
                .map(|i| dot(&cov_inv.row(i), &means[c]))
                .collect()
        });
        let offsets = std::array::from_fn(|c| -0.5 * dot(&weights[c], &means[c]) + log_priors[c]);
        LdaModel {
            means,
            cov_inv,
            log_priors,
            weights,
            offsets,
        }
    }

    pub fn means(&self) -> &[Vec<f64>; 3] {
        &self.means
    }

    pub fn cov_inv(&self) -> &DenseMatrix {
        &self.cov_inv
    }

    pub fn log_priors(&self) -> &[f64; 3] {
        &self.log_priors
    }

    pub fn features(&self) -> usize {
        self.cov_inv.rows()
    }

    pub fn scores(&self, x: &[f64]) -> [f64; 3] {
        std::array::from_fn(|c| {
            if self.log_priors[c] == f64::NEG_INFINITY {
                f64::NEG_INFINITY
            } else {
                dot(x, &self.weights[c]) + self.offsets[c]
            }
        })
    }

    pub fn predict(&self, x: &[f64]) -> PatternClass {
        PatternClass::ALL[argmax_lowest(&self.scores(x))]
    }
}
