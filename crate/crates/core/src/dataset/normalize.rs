use serde::{Deserialize, Serialize};

use super::{DatasetError, Result};
use crate::linalg::DenseMatrix;

/// Per-feature mean and sample standard deviation (`m − 1` denominator)
/// of training coordinates. Rows of a coordinate matrix are features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizationStats {
    mean: Vec<f64>,
    std: Vec<f64>,
}

impl NormalizationStats {
    pub fn new(mean: Vec<f64>, std: Vec<f64>) -> Result<Self> {
        if mean.len() != std.len() {
            return Err(DatasetError::FeatureCount {
                expected: mean.len(),
                found: std.len(),
            });
        }
        if let Some(i) = std.iter().position(|&s| !(s > 0.0)) {
            return Err(DatasetError::ZeroVariance(i));
        }
        Ok(NormalizationStats { mean, std })
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn std(&self) -> &[f64] {
        &self.std
    }

    pub fn features(&self) -> usize {
        self.mean.len()
    }

    /// `(x − mean) / std` for one sample.
    pub fn apply_sample(&self, x: &mut [f64]) {
        for ((v, m), s) in x.iter_mut().zip(&self.mean).zip(&self.std) {
            *v = (*v - m) / s;
        }
    }
}

pub fn fit_normalization(coords: &DenseMatrix) -> Result<NormalizationStats> {
    let (r, m) = (coords.rows(), coords.cols());
    if m < 2 {
        return Err(DatasetError::TooFewSamples(m));
    }
    let mut mean = vec![0.0; r];
    for col in coords.columns() {
        for (acc, v) in mean.iter_mut().zip(col) {
            *acc += v;
        }
    }
    for v in mean.iter_mut() {
        *v /= m as f64;
    }
    let mut var = vec![0.0; r];
    for col in coords.columns() {
        for ((acc, v), mu) in var.iter_mut().zip(col).zip(&mean) {
            *acc += (v - mu) * (v - mu);
        }
    }
    let std = var.iter().map(|v| (v / (m - 1) as f64).sqrt()).collect();
    NormalizationStats::new(mean, std)
}

fn check(stats: &NormalizationStats, coords: &DenseMatrix) -> Result<()> {
    if coords.rows() != stats.features() {
        return Err(DatasetError::FeatureCount {
            expected: stats.features(),
            found: coords.rows(),
        });
    }
    Ok(())
}

pub fn apply_normalization(stats: &NormalizationStats, coords: &DenseMatrix) -> Result<DenseMatrix> {
    check(stats, coords)?;
    let mut out = coords.clone();
    for j in 0..out.cols() {
        stats.apply_sample(out.column_mut(j));
    }
    Ok(out)
}

/// `x · std + mean`, the inverse of [`apply_normalization`].
pub fn invert_normalization(stats: &NormalizationStats, coords: &DenseMatrix) -> Result<DenseMatrix> {
    check(stats, coords)?;
    let mut out = coords.clone();
    for j in 0..out.cols() {
        for ((v, m), s) in out.column_mut(j).iter_mut().zip(&stats.mean).zip(&stats.std) {
            *v = *v * s + m;
        }
    }
    Ok(out)
}
