//! Single-file model format.
//!
//! ```text
//! offset  size  content
//! 0       4     magic "EPAT"
//! 4       4     format version, u32 little-endian (currently 1)
//! 8       4     header length H in bytes, u32 little-endian
//! 12      H     UTF-8 JSON header (scalars and the array table)
//! 12+H    ...   for each entry of header.arrays, in order:
//!                 u64 little-endian element count (must equal the declared len)
//!                 count × f64 little-endian
//! ```
//!
//! Class labels and tree node links are stored as f64 values holding
//! small integers. Nothing may follow the last array.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{
    Classifier, ClassifierKind, GnbModel, KnnModel, LdaModel, Preprocessing, Provenance, TrainedModel, TreeModel,
    TreeNode,
};
use crate::class::PatternClass;
use crate::dataset::NormalizationStats;
use crate::linalg::DenseMatrix;

pub const MAGIC: [u8; 4] = *b"EPAT";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum PersistError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("not a model file (bad magic bytes)")]
    BadMagic,
    #[error("unsupported model format version {0} (this build reads version {FORMAT_VERSION})")]
    UnsupportedVersion(u32),
    #[error("model file is truncated")]
    Truncated,
    #[error("malformed model file: {0}")]
    Malformed(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct ArrayDecl {
    name: String,
    len: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Header {
    classifier: ClassifierKind,
    features: usize,
    basis_rows: usize,
    use_fft: bool,
    normalized: bool,
    neighbors: usize,
    train_samples: usize,
    tree_nodes: usize,
    provenance: Provenance,
    arrays: Vec<ArrayDecl>,
}

struct Arrays(Vec<(String, Vec<f64>)>);

impl Arrays {
    fn push(&mut self, name: &str, data: Vec<f64>) {
        self.0.push((name.to_string(), data));
    }

    fn take(&mut self, name: &str, len: usize) -> Result<Vec<f64>, PersistError> {
        let pos = self
            .0
            .iter()
            .position(|(n, _)| n == name)
            .ok_or_else(|| PersistError::Malformed(format!("missing array {name}")))?;
        let (_, data) = self.0.remove(pos);
        if data.len() != len {
            return Err(PersistError::Malformed(format!(
                "array {name} has {} values, expected {len}",
                data.len()
            )));
        }
        Ok(data)
    }
}

fn label_from(v: f64) -> Result<PatternClass, PersistError> {
    if v.fract() == 0.0 && v >= 0.0 {
        if let Some(c) = PatternClass::from_index(v as usize) {
            return Ok(c);
        }
    }
    Err(PersistError::Malformed(format!("invalid class code {v}")))
}

fn index_from(v: f64) -> Result<usize, PersistError> {
    if v.fract() == 0.0 && v >= 0.0 && v < u32::MAX as f64 {
        Ok(v as usize)
    } else {
        Err(PersistError::Malformed(format!("invalid index {v}")))
    }
}

fn flatten3(rows: &[Vec<f64>; 3]) -> Vec<f64> {
    rows.iter().flatten().copied().collect()
}

fn split3(v: Vec<f64>, r: usize) -> [Vec<f64>; 3] {
    std::array::from_fn(|c| v[c * r..(c + 1) * r].to_vec())
}

/// Serializes a model to bytes.
pub fn write_model(model: &TrainedModel) -> Vec<u8> {
    let r = model.basis().cols();
    let mut arrays = Arrays(Vec::new());
    arrays.push("basis", model.basis().as_slice().to_vec());
    if let Some(n) = &model.preprocessing().normalization {
        arrays.push("norm_mean", n.mean().to_vec());
        arrays.push("norm_std", n.std().to_vec());
    }
    let (mut neighbors, mut train_samples, mut tree_nodes) = (0, 0, 0);
    match model.classifier() {
        Classifier::Knn(k) => {
            neighbors = k.neighbors();
            train_samples = k.train_labels().len();
            arrays.push("train_coords", k.train_coords().as_slice().to_vec());
            arrays.push("train_labels", k.train_labels().iter().map(|l| l.index() as f64).collect());
        }
        Classifier::Tree(t) => {
            tree_nodes = t.nodes().len();
            let mut cols: [Vec<f64>; 5] = Default::default();
            for n in t.nodes() {
                let row = match *n {
                    TreeNode::Leaf(c) => [-1.0, 0.0, -1.0, -1.0, c.index() as f64],
                    TreeNode::Split {
                        feature,
                        threshold,
                        left,
                        right,
                    } => [feature as f64, threshold, left as f64, right as f64, -1.0],
                };
                for (col, v) in cols.iter_mut().zip(row) {
                    col.push(v);
                }
            }
            let [feature, threshold, left, right, class] = cols;
            arrays.push("node_feature", feature);
            arrays.push("node_threshold", threshold);
            arrays.push("node_left", left);
            arrays.push("node_right", right);
            arrays.push("node_class", class);
        }
        Classifier::Gnb(g) => {
            arrays.push("class_means", flatten3(g.means()));
            arrays.push("class_variances", flatten3(g.variances()));
            arrays.push("log_priors", g.log_priors().to_vec());
        }
        Classifier::Lda(l) => {
            arrays.push("class_means", flatten3(l.means()));
            arrays.push("cov_inv", l.cov_inv().as_slice().to_vec());
            arrays.push("log_priors", l.log_priors().to_vec());
        }
    }

    let header = Header {
        classifier: model.classifier().kind(),
        features: r,
        basis_rows: model.basis().rows(),
        use_fft: model.preprocessing().use_fft,
        normalized: model.preprocessing().normalization.is_some(),
        neighbors,
        train_samples,
        tree_nodes,
        provenance: model.provenance().clone(),
        arrays: arrays
            .0
            .iter()
            .map(|(name, d)| ArrayDecl {
                name: name.clone(),
                len: d.len(),
            })
            .collect(),
    };
    let json = serde_json::to_vec(&header).expect("header serializes");

    let mut out = Vec::new();
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(json.len() as u32).to_le_bytes());
    out.extend_from_slice(&json);
    for (_, data) in &arrays.0 {
        out.extend_from_slice(&(data.len() as u64).to_le_bytes());
        for v in data {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], PersistError> {
        let end = self.pos.checked_add(n).ok_or(PersistError::Truncated)?;
        let s = self.bytes.get(self.pos..end).ok_or(PersistError::Truncated)?;
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32, PersistError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64, PersistError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
}

/// Parses bytes produced by [`write_model`].
pub fn read_model(bytes: &[u8]) -> Result<TrainedModel, PersistError> {
    let mut cur = Cursor { bytes, pos: 0 };
    let magic = cur.take(4).map_err(|_| PersistError::BadMagic)?;
    if magic != MAGIC {
        return Err(PersistError::BadMagic);
    }
    let version = cur.u32()?;
    if version != FORMAT_VERSION {
        return Err(PersistError::UnsupportedVersion(version));
    }
    let hlen = cur.u32()? as usize;
    let header: Header =
        serde_json::from_slice(cur.take(hlen)?).map_err(|e| PersistError::Malformed(format!("header: {e}")))?;

    let mut arrays = Arrays(Vec::new());
    for decl in &header.arrays {
        let count = cur.u64()?;
        if count != decl.len as u64 {
            return Err(PersistError::Malformed(format!(
                "array {} declares {} values but stores {count}",
                decl.name, decl.len
            )));
        }
        let raw = cur.take(decl.len.checked_mul(8).ok_or(PersistError::Truncated)?)?;
        let data = raw
            .chunks_exact(8)
            .map(|b| f64::from_le_bytes(b.try_into().expect("8 bytes")))
            .collect();
        arrays.push(&decl.name, data);
    }
    if cur.pos != bytes.len() {
        return Err(PersistError::Malformed(format!(
            "{} trailing bytes",
            bytes.len() - cur.pos
        )));
    }

    let r = header.features;
    let n = header.basis_rows;
    let bad = |e: &dyn std::fmt::Display| PersistError::Malformed(e.to_string());
    let basis = DenseMatrix::from_col_major(n, r, arrays.take("basis", n * r)?).map_err(|e| bad(&e))?;
    let normalization = if header.normalized {
        let mean = arrays.take("norm_mean", r)?;
        let std = arrays.take("norm_std", r)?;
        Some(NormalizationStats::new(mean, std).map_err(|e| bad(&e))?)
    } else {
        None
    };

    let classifier = match header.classifier {
        ClassifierKind::Knn => {
            let m = header.train_samples;
            let coords = DenseMatrix::from_col_major(r, m, arrays.take("train_coords", r * m)?).map_err(|e| bad(&e))?;
            let labels = arrays
                .take("train_labels", m)?
                .into_iter()
                .map(label_from)
                .collect::<Result<Vec<_>, _>>()?;
            Classifier::Knn(KnnModel::from_parts(coords, labels, header.neighbors).map_err(|e| bad(&e))?)
        }
        ClassifierKind::Tree => {
            let k = header.tree_nodes;
            let feature = arrays.take("node_feature", k)?;
            let threshold = arrays.take("node_threshold", k)?;
            let left = arrays.take("node_left", k)?;
            let right = arrays.take("node_right", k)?;
            let class = arrays.take("node_class", k)?;
            let mut nodes = Vec::with_capacity(k);
            for i in 0..k {
                nodes.push(if feature[i] < 0.0 {
                    TreeNode::Leaf(label_from(class[i])?)
                } else {
                    TreeNode::Split {
                        feature: index_from(feature[i])?,
                        threshold: threshold[i],
                        left: index_from(left[i])?,
                        right: index_from(right[i])?,
                    }
                });
            }
            Classifier::Tree(
                TreeModel::from_nodes(nodes, r).ok_or_else(|| PersistError::Malformed("invalid tree links".into()))?,
            )
        }
        ClassifierKind::Gnb => {
            let means = split3(arrays.take("class_means", 3 * r)?, r);
            let vars = split3(arrays.take("class_variances", 3 * r)?, r);
            let priors = arrays.take("log_priors", 3)?;
            Classifier::Gnb(GnbModel::from_parts(means, vars, [priors[0], priors[1], priors[2]]))
        }
        ClassifierKind::Lda => {
            let means = split3(arrays.take("class_means", 3 * r)?, r);
            let cov_inv = DenseMatrix::from_col_major(r, r, arrays.take("cov_inv", r * r)?).map_err(|e| bad(&e))?;
            let priors = arrays.take("log_priors", 3)?;
            Classifier::Lda(LdaModel::from_parts(means, cov_inv, [priors[0], priors[1], priors[2]]))
        }
    };
    if let Some((name, _)) = arrays.0.first() {
        return Err(PersistError::Malformed(format!("unexpected array {name}")));
    }

    TrainedModel::new(
        Preprocessing {
            use_fft: header.use_fft,
            normalization,
        },
        basis,
        classifier,
        header.provenance,
    )
    .map_err(|e| bad(&e))
}

pub fn save_model(model: &TrainedModel, path: &Path) -> Result<(), PersistError> {
    fs::write(path, write_model(model)).map_err(|source| PersistError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_model(path: &Path) -> Result<TrainedModel, PersistError> {
    let bytes = fs::read(path).map_err(|source| PersistError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    read_model(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classify::{ClassifierParams, FeatureMatrix};
    use crate::dataset::fit_normalization;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn model(kind: ClassifierKind, normalized: bool) -> TrainedModel {
        let mut rng = ChaCha8Rng::seed_from_u64(kind as u64);
        let (n, r, m) = (9, 3, 30);
        let basis = DenseMatrix::from_fn(n, r, |_, _| rng.random_range(-1.0..1.0));
        let coords = DenseMatrix::from_fn(r, m, |i, j| (j % 3) as f64 * (i as f64 + 1.0) + rng.random_range(-0.7..0.7));
        let labels = (0..m).map(|j| PatternClass::ALL[j % 3]).collect();
        let f = FeatureMatrix::new(coords.clone(), labels).unwrap();
        let params = ClassifierParams {
            neighbors: 3,
            ..Default::default()
        };
        let clf = Classifier::fit(kind, &params, &f).unwrap();
        TrainedModel::new(
            Preprocessing {
                use_fft: false,
                normalization: normalized.then(|| fit_normalization(&coords).unwrap()),
            },
            basis,
            clf,
            Provenance {
                seed: 17,
                target_rank: 5,
                truncation_rank: r,
                dataset_digest: "abc".into(),
            },
        )
        .unwrap()
    }

    #[test]
    fn every_classifier_round_trips_bit_exactly() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for kind in ClassifierKind::ALL {
            for normalized in [false, true] {
                let m = model(kind, normalized);
                let bytes = write_model(&m);
                let back = read_model(&bytes).unwrap();
                assert_eq!(back, m, "{kind}");
                assert_eq!(write_model(&back), bytes);
                for _ in 0..100 {
                    let px: Vec<f64> = (0..9).map(|_| rng.random_range(0.0..1.0)).collect();
                    assert_eq!(back.predict_pixels(&px).unwrap(), m.predict_pixels(&px).unwrap());
                }
            }
        }
    }

    #[test]
    fn corrupted_files_give_distinct_errors() {
        let bytes = write_model(&model(ClassifierKind::Knn, false));

        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(read_model(&bad), Err(PersistError::BadMagic)));
        assert!(matches!(read_model(b"EP"), Err(PersistError::BadMagic)));

        let mut future = bytes.clone();
        future[4..8].copy_from_slice(&2u32.to_le_bytes());
        assert!(matches!(read_model(&future), Err(PersistError::UnsupportedVersion(2))));

        assert!(matches!(read_model(&bytes[..bytes.len() - 3]), Err(PersistError::Truncated)));
        assert!(matches!(read_model(&bytes[..10]), Err(PersistError::Truncated)));

        let mut extra = bytes.clone();
        extra.push(0);
        assert!(matches!(read_model(&extra), Err(PersistError::Malformed(_))));
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.epat");
        let m = model(ClassifierKind::Tree, true);
        save_model(&m, &path).unwrap();
        assert_eq!(load_model(&path).unwrap(), m);
        assert!(matches!(load_model(&dir.path().join("nope")), Err(PersistError::Io { .. })));
    }
}
