use super::{ClassifyError, FeatureMatrix, Result};
use crate::class::{argmax_lowest, PatternClass};
use crate::linalg::DenseMatrix;

/// Brute-force k-nearest-neighbor lookup under Euclidean distance.
///
/// Distance ties go to the lower training index, vote ties to the lower
/// class index.
#[derive(Debug, Clone, PartialEq)]
pub struct KnnModel {
    train: DenseMatrix,
    labels: Vec<PatternClass>,
    neighbors: usize,
}

impl KnnModel {
    pub fn fit(f: &FeatureMatrix, neighbors: usize) -> Result<Self> {
        Self::from_parts(f.coords().clone(), f.labels().to_vec(), neighbors)
    }

    pub(crate) fn from_parts(train: DenseMatrix, labels: Vec<PatternClass>, neighbors: usize) -> Result<Self> {
        if neighbors == 0 || neighbors > train.cols() {
            return Err(ClassifyError::NeighborCount {
                neighbors,
                samples: train.cols(),
            });
        }
        Ok(KnnModel {
            train,
            labels,
            neighbors,
        })
    }

    pub fn features(&self) -> usize {
        self.train.rows()
    }

    pub fn neighbors(&self) -> usize {
        self.neighbors
    }

    pub fn train_coords(&self) -> &DenseMatrix {
        &self.train
    }

    pub fn train_labels(&self) -> &[PatternClass] {
        &self.labels
    }

    fn sq_dist(&self, j: usize, x: &[f64]) -> f64 {
        self.train
            .column(j)
            .iter()
            .zip(x)
            .map(|(a, b)| (a - b) * (a - b))
            .sum()
    }

    pub fn predict(&self, x: &[f64]) -> PatternClass {
        let m = self.train.cols();
        if self.neighbors == 1 {
            let mut best = (f64::INFINITY, 0);
            for j in 0..m {
                let d = self.sq_dist(j, x);
                if d < best.0 {
                    best = (d, j);
                }
            }
            return self.labels[best.1];
        }
        let mut dists: Vec<(f64, usize)> = (0..m).map(|j| (self.sq_dist(j, x), j)).collect();
        let k = self.neighbors;
        let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        if k < m {
            dists.select_nth_unstable_by(k - 1, cmp);
        }
        let mut votes = [0.0; 3];
        for &(_, j) in &dists[..k] {
            votes[self.labels[j].index()] += 1.0;
        }
        PatternClass::ALL[argmax_lowest(&votes)]
    }
}
