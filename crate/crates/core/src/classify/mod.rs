//! Supervised classifiers on reduced-order coordinates and the model
//! container that carries the projection basis and preprocessing along.

mod gnb;
mod knn;
mod lda;
mod persist;
mod tree;

pub use gnb::GnbModel;
pub use knn::KnnModel;
pub use lda::LdaModel;
pub use persist::{load_model, save_model, write_model, read_model, PersistError, FORMAT_VERSION, MAGIC};
pub use tree::{TreeModel, TreeNode};

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::class::PatternClass;
use crate::dataset::{fft_magnitude_image, NormalizationStats, PatternImage};
use crate::linalg::DenseMatrix;

#[derive(Debug, Error)]
pub enum ClassifyError {
    #[error("training set is empty")]
    EmptyTraining,
    #[error("{labels} labels for {samples} samples")]
    LabelCount { labels: usize, samples: usize },
    #[error("non-finite feature value in sample {0}")]
    NonFinite(usize),
    #[error("neighbor count {neighbors} outside 1..={samples}")]
    NeighborCount { neighbors: usize, samples: usize },
    #[error("class {class} has {count} training samples, at least 2 are needed")]
    TooFewSamples { class: PatternClass, count: usize },
    #[error("pooled covariance is singular even after ridge regularization")]
    SingularCovariance,
    #[error("expected {expected} features, got {found}")]
    FeatureMismatch { expected: usize, found: usize },
    #[error("image has {found} pixels but the model basis expects {expected}")]
    ImageSize { expected: usize, found: usize },
    #[error(transparent)]
    Persist(#[from] PersistError),
}

pub type Result<T> = std::result::Result<T, ClassifyError>;

/// Reduced coordinates (`r × m`, one column per sample) with labels.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    coords: DenseMatrix,
    labels: Vec<PatternClass>,
}

impl FeatureMatrix {
    pub fn new(coords: DenseMatrix, labels: Vec<PatternClass>) -> Result<Self> {
        if labels.len() != coords.cols() {
            return Err(ClassifyError::LabelCount {
                labels: labels.len(),
                samples: coords.cols(),
            });
        }
        if coords.cols() == 0 || coords.rows() == 0 {
            return Err(ClassifyError::EmptyTraining);
        }
        if let Some(j) = (0..coords.cols()).find(|&j| coords.column(j).iter().any(|v| !v.is_finite())) {
            return Err(ClassifyError::NonFinite(j));
        }
        Ok(FeatureMatrix { coords, labels })
    }

    pub fn coords(&self) -> &DenseMatrix {
        &self.coords
    }

    pub fn labels(&self) -> &[PatternClass] {
        &self.labels
    }

    pub fn features(&self) -> usize {
        self.coords.rows()
    }

    pub fn samples(&self) -> usize {
        self.coords.cols()
    }

    pub fn sample(&self, j: usize) -> &[f64] {
        self.coords.column(j)
    }

    pub(crate) fn class_counts(&self) -> [usize; 3] {
        let mut c = [0; 3];
        for l in &self.labels {
            c[l.index()] += 1;
        }
        c
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassifierKind {
    Knn,
    Tree,
    Gnb,
    Lda,
}

impl ClassifierKind {
    pub const ALL: [ClassifierKind; 4] = [
        ClassifierKind::Tree,
        ClassifierKind::Gnb,
        ClassifierKind::Lda,
        ClassifierKind::Knn,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ClassifierKind::Knn => "knn",
            ClassifierKind::Tree => "tree",
            ClassifierKind::Gnb => "gnb",
            ClassifierKind::Lda => "lda",
        }
    }
}

impl fmt::Display for ClassifierKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ClassifierKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "knn" => Ok(ClassifierKind::Knn),
            "tree" => Ok(ClassifierKind::Tree),
            "gnb" | "nb" => Ok(ClassifierKind::Gnb),
            "lda" | "ld" => Ok(ClassifierKind::Lda),
            other => Err(format!("unknown classifier {other:?} (expected knn, tree, gnb or lda)")),
        }
    }
}

/// Hyperparameters for all four classifiers; each reads only its own.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassifierParams {
    pub neighbors: usize,
    pub max_depth: usize,
    pub min_leaf: usize,
}

impl Default for ClassifierParams {
    fn default() -> Self {
        ClassifierParams {
            neighbors: 1,
            max_depth: 32,
            min_leaf: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Classifier {
    Knn(KnnModel),
    Tree(TreeModel),
    Gnb(GnbModel),
    Lda(LdaModel),
}

impl Classifier {
    pub fn fit(kind: ClassifierKind, params: &ClassifierParams, f: &FeatureMatrix) -> Result<Self> {
        Ok(match kind {
            ClassifierKind::Knn => Classifier::Knn(KnnModel::fit(f, params.neighbors)?),
            ClassifierKind::Tree => Classifier::Tree(TreeModel::fit(f, params.max_depth, params.min_leaf)),
            ClassifierKind::Gnb => Classifier::Gnb(GnbModel::fit(f)?),
            ClassifierKind::Lda => Classifier::Lda(LdaModel::fit(f)?),
        })
    }

    pub fn kind(&self) -> ClassifierKind {
        match self {
            Classifier::Knn(_) => ClassifierKind::Knn,
            Classifier::Tree(_) => ClassifierKind::Tree,
            Classifier::Gnb(_) => ClassifierKind::Gnb,
            Classifier::Lda(_) => ClassifierKind::Lda,
        }
    }

    pub fn features(&self) -> usize {
        match self {
            Classifier::Knn(m) => m.features(),
            Classifier::Tree(m) => m.features(),
            Classifier::Gnb(m) => m.features(),
            Classifier::Lda(m) => m.features(),
        }
    }

    /// Class of one coordinate vector; its length must equal [`Self::features`].
    pub fn predict(&self, x: &[f64]) -> PatternClass {
        match self {
            Classifier::Knn(m) => m.predict(x),
            Classifier::Tree(m) => m.predict(x),
            Classifier::Gnb(m) => m.predict(x),
            Classifier::Lda(m) => m.predict(x),
        }
    }

    /// Predicts every column of `coords`.
    pub fn predict_all(&self, coords: &DenseMatrix) -> Result<Vec<PatternClass>> {
        if coords.rows() != self.features() {
            return Err(ClassifyError::FeatureMismatch {
                expected: self.features(),
                found: coords.rows(),
            });
        }
        Ok((0..coords.cols())
            .into_par_iter()
            .map(|j| self.predict(coords.column(j)))
            .collect())
    }
}

/// Steps applied to a raw image before the classifier sees it.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Preprocessing {
    pub use_fft: bool,
    pub normalization: Option<NormalizationStats>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Provenance {
    pub seed: u64,
    pub target_rank: usize,
    pub truncation_rank: usize,
    pub dataset_digest: String,
}

/// Everything needed to classify a raw image: preprocessing flags, the
/// truncated basis `U_r` and a fitted classifier.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    preprocessing: Preprocessing,
    basis: DenseMatrix,
    classifier: Classifier,
    provenance: Provenance,
}

impl TrainedModel {
    pub fn new(
        preprocessing: Preprocessing,
        basis: DenseMatrix,
        classifier: Classifier,
        provenance: Provenance,
    ) -> Result<Self> {
        if basis.cols() != classifier.features() {
            return Err(ClassifyError::FeatureMismatch {
                expected: classifier.features(),
                found: basis.cols(),
            });
        }
        if let Some(n) = &preprocessing.normalization {
            if n.features() != basis.cols() {
                return Err(ClassifyError::FeatureMismatch {
                    expected: basis.cols(),
                    found: n.features(),
                });
            }
        }
        Ok(TrainedModel {
            preprocessing,
            basis,
            classifier,
            provenance,
        })
    }

    pub fn preprocessing(&self) -> &Preprocessing {
        &self.preprocessing
    }

    pub fn basis(&self) -> &DenseMatrix {
        &self.basis
    }

    pub fn classifier(&self) -> &Classifier {
        &self.classifier
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    /// Image side length the basis was built for.
    pub fn side(&self) -> usize {
        (self.basis.rows() as f64).sqrt().round() as usize
    }

    /// Reduced (and optionally normalized) coordinates of one flattened image.
    pub fn features_of(&self, pixels: &[f64]) -> Result<Vec<f64>> {
        if pixels.len() != self.basis.rows() {
            return Err(ClassifyError::ImageSize {
                expected: self.basis.rows(),
                found: pixels.len(),
            });
        }
        let spectrum;
        let column = if self.preprocessing.use_fft {
            spectrum = fft_magnitude_image(pixels, self.side());
            &spectrum[..]
        } else {
            pixels
        };
        let mut coords: Vec<f64> = self
            .basis
            .columns()
            .map(|mode| crate::linalg::dot(mode, column))
            .collect();
        if let Some(n) = &self.preprocessing.normalization {
            n.apply_sample(&mut coords);
        }
        Ok(coords)
    }

    pub fn predict(&self, image: &PatternImage) -> Result<PatternClass> {
        self.predict_pixels(image.pixels())
    }

    pub fn predict_pixels(&self, pixels: &[f64]) -> Result<PatternClass> {
        Ok(self.classifier.predict(&self.features_of(pixels)?))
    }

    pub fn predict_images(&self, images: &[&PatternImage]) -> Result<Vec<PatternClass>> {
        images.par_iter().map(|im| self.predict(im)).collect()
    }
}
