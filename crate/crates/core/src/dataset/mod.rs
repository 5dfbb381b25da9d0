//! Labeled pattern images and everything needed to turn them into data
//! matrices: ingestion, FFT-magnitude preprocessing, balancing, splitting
//! and feature normalization.

mod fft;
mod io;
mod normalize;
mod sampling;

pub use fft::{fft_magnitude, fft_magnitude_image, inverse_fft_zero_phase};
pub use io::{
    load_dataset, load_entries, load_image, load_image_dir, read_manifest, save_png, write_dataset, ImageEntry,
    ManifestRow, MANIFEST_HEADER,
};
pub use normalize::{apply_normalization, fit_normalization, invert_normalization, NormalizationStats};
pub use sampling::{balance, split_indices, train_test_split, SplitIndices};

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::class::PatternClass;
use crate::linalg::DenseMatrix;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("manifest row {row}: {message}")]
    Manifest { row: usize, message: String },
    #[error("manifest row {row}: image file {path} does not exist")]
    MissingFile { row: usize, path: PathBuf },
    #[error("manifest row {row}: cannot decode {path}: {message}")]
    Decode { row: usize, path: PathBuf, message: String },
    #[error("manifest row {row}: {source}")]
    UnknownLabel {
        row: usize,
        #[source]
        source: crate::class::UnknownLabel,
    },
    #[error("manifest row {row}: label is required")]
    MissingLabel { row: usize },
    #[error("manifest row {row}: image {path} is {width}x{height}, expected a square {side}x{side} image")]
    ImageSize {
        row: usize,
        path: PathBuf,
        width: u32,
        height: u32,
        side: usize,
    },
    #[error("dataset is empty")]
    Empty,
    #[error("image {index} has side {found}, expected {expected}")]
    InconsistentSide { index: usize, expected: usize, found: usize },
    #[error("pixel values must lie in [0, 1]; image {index} has {value}")]
    PixelRange { index: usize, value: f64 },
    #[error("class {0} has no images")]
    MissingClass(PatternClass),
    #[error("requested {requested} images per class but class {class} has only {available}")]
    PerClassTooLarge {
        requested: usize,
        class: PatternClass,
        available: usize,
    },
    #[error("train fraction {0} must lie strictly between 0 and 1")]
    TrainFraction(f64),
    #[error("split of {total} images leaves an empty side (train {train}, test {test})")]
    EmptySplit { total: usize, train: usize, test: usize },
    #[error("normalization needs at least 2 samples, got {0}")]
    TooFewSamples(usize),
    #[error("feature {0} has zero variance")]
    ZeroVariance(usize),
    #[error("feature count mismatch: stats have {expected}, coords have {found}")]
    FeatureCount { expected: usize, found: usize },
    #[error("cannot write {path}: {message}")]
    Write { path: PathBuf, message: String },
}

pub type Result<T> = std::result::Result<T, DatasetError>;

/// Square grayscale pixel grid, row-major, values in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PatternImage {
    side: usize,
    pixels: Vec<f64>,
}

impl PatternImage {
    pub fn new(side: usize, pixels: Vec<f64>) -> Result<Self> {
        if pixels.len() != side * side || side == 0 {
            return Err(DatasetError::InconsistentSide {
                index: 0,
                expected: side,
                found: (pixels.len() as f64).sqrt() as usize,
            });
        }
        if let Some(&value) = pixels.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(DatasetError::PixelRange { index: 0, value });
        }
        Ok(PatternImage { side, pixels })
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    /// Pixel at row `y`, column `x`.
    pub fn at(&self, y: usize, x: usize) -> f64 {
        self.pixels[y * self.side + x]
    }

    /// Inverse of the flattening used by [`to_data_matrix`].
    pub fn from_column(side: usize, column: &[f64]) -> Result<Self> {
        Self::new(side, column.to_vec())
    }

    /// Circular translation by (`dy`, `dx`) pixels.
    pub fn rolled(&self, dy: usize, dx: usize) -> PatternImage {
        let s = self.side;
        let mut out = vec![0.0; s * s];
        for y in 0..s {
            for x in 0..s {
                out[((y + dy) % s) * s + (x + dx) % s] = self.pixels[y * s + x];
            }
        }
        PatternImage { side: s, pixels: out }
    }
}

/// Printing-process parameters attached to an image.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ImageMeta {
    pub experiment: String,
    /// m/min
    pub velocity: f64,
    /// percent
    pub tonal_value: f64,
    /// lines/cm
    pub raster_frequency: f64,
    /// electrostatic printing assist
    pub esa: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledImage {
    pub name: String,
    pub image: PatternImage,
    pub label: PatternClass,
    pub meta: ImageMeta,
}

/// Nonempty collection of equally sized labeled images.
#[derive(Debug, Clone, PartialEq)]
pub struct PatternDataset {
    images: Vec<LabeledImage>,
}

impl PatternDataset {
    pub fn new(images: Vec<LabeledImage>) -> Result<Self> {
        let side = images.first().ok_or(DatasetError::Empty)?.image.side();
        for (index, img) in images.iter().enumerate() {
            if img.image.side() != side {
                return Err(DatasetError::InconsistentSide {
                    index,
                    expected: side,
                    found: img.image.side(),
                });
            }
        }
        Ok(PatternDataset { images })
    }

    pub fn images(&self) -> &[LabeledImage] {
        &self.images
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    pub fn side(&self) -> usize {
        self.images[0].image.side()
    }

    pub fn labels(&self) -> Vec<PatternClass> {
        self.images.iter().map(|i| i.label).collect()
    }

    /// Images per class in A, B, C order.
    pub fn label_counts(&self) -> [usize; 3] {
        let mut counts = [0; 3];
        for img in &self.images {
            counts[img.label.index()] += 1;
        }
        counts
    }

    /// Subset in the given order. Indices must be in range.
    pub fn subset(&self, idx: &[usize]) -> Result<PatternDataset> {
        PatternDataset::new(idx.iter().map(|&i| self.images[i].clone()).collect())
    }

    /// SHA-256 over side length, labels and pixel bits, hex encoded.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        h.update((self.side() as u64).to_le_bytes());
        for img in &self.images {
            h.update([img.label.index() as u8]);
            for p in img.image.pixels() {
                h.update(p.to_le_bytes());
            }
        }
        hex::encode(h.finalize())
    }
}

/// One column per image; pixel (y, x) lands in row `y * side + x`.
pub fn to_data_matrix(ds: &PatternDataset) -> DenseMatrix {
    let cols: Vec<&[f64]> = ds.images.iter().map(|i| i.image.pixels()).collect();
    DenseMatrix::from_columns(&cols).expect("dataset images share one side length")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn img(side: usize, f: impl Fn(usize) -> f64, label: PatternClass) -> LabeledImage {
        LabeledImage {
            name: String::new(),
            image: PatternImage::new(side, (0..side * side).map(f).collect()).unwrap(),
            label,
            meta: ImageMeta::default(),
        }
    }

    #[test]
    fn data_matrix_shape_and_roundtrip() {
        let ds = PatternDataset::new(vec![
            img(4, |i| i as f64 / 16.0, PatternClass::Dots),
            img(4, |_| 0.0, PatternClass::Mixed),
            img(4, |i| (i % 3) as f64 / 2.0, PatternClass::Fingers),
        ])
        .unwrap();
        let x = to_data_matrix(&ds);
        assert_eq!((x.rows(), x.cols()), (16, 3));
        assert!(x.column(1).iter().all(|&v| v == 0.0));
        for (j, li) in ds.images().iter().enumerate() {
            assert_eq!(PatternImage::from_column(4, x.column(j)).unwrap(), li.image);
        }
        // raster order is row-major
        assert_eq!(x.get(4 + 1, 0), ds.images()[0].image.at(1, 1));
    }

    #[test]
    fn full_size_images_give_67600_rows() {
        let ds = PatternDataset::new(
            (0..3)
                .map(|_| img(260, |_| 0.5, PatternClass::Dots))
                .collect(),
        )
        .unwrap();
        let x = to_data_matrix(&ds);
        assert_eq!((x.rows(), x.cols()), (67600, 3));
    }

    #[test]
    fn invariants_enforced() {
        assert!(matches!(PatternDataset::new(vec![]), Err(DatasetError::Empty)));
        let mixed = vec![img(4, |_| 0.0, PatternClass::Dots), img(5, |_| 0.0, PatternClass::Dots)];
        assert!(matches!(
            PatternDataset::new(mixed),
            Err(DatasetError::InconsistentSide { index: 1, .. })
        ));
        assert!(PatternImage::new(2, vec![0.0, 1.5, 0.0, 0.0]).is_err());
    }

    #[test]
    fn rolling_wraps_around() {
        let im = PatternImage::new(3, (0..9).map(|i| i as f64 / 8.0).collect()).unwrap();
        let r = im.rolled(1, 2);
        assert_eq!(r.at(1, 2), im.at(0, 0));
        assert_eq!(r.at(0, 0), im.at(2, 1));
    }
}
