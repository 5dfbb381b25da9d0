use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{DatasetError, PatternDataset, Result};
use crate::class::PatternClass;

/// Undersamples every class to `per_class` images (default: the smallest
/// class count). Selected images keep their original relative order.
pub fn balance(ds: &PatternDataset, seed: u64, per_class: Option<usize>) -> Result<PatternDataset> {
    let counts = ds.label_counts();
    for c in PatternClass::ALL {
        if counts[c.index()] == 0 {
            return Err(DatasetError::MissingClass(c));
        }
    }
    let target = per_class.unwrap_or_else(|| *counts.iter().min().expect("three classes"));
    for c in PatternClass::ALL {
        if target > counts[c.index()] {
            return Err(DatasetError::PerClassTooLarge {
                requested: target,
                class: c,
                available: counts[c.index()],
            });
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut keep = Vec::with_capacity(3 * target);
    for c in PatternClass::ALL {
        let mut members: Vec<usize> = ds
            .images()
            .iter()
            .enumerate()
            .filter(|(_, li)| li.label == c)
            .map(|(i, _)| i)
            .collect();
        members.shuffle(&mut rng);
        keep.extend_from_slice(&members[..target]);
    }
    keep.sort_unstable();
    ds.subset(&keep)
}

/// Disjoint train/test index sets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitIndices {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Random partition of `labels.len()` samples.
///
/// Unstratified: a single shuffle, the first `round(fraction · m)` go to
/// training. Stratified: each class is shuffled and split on its own with
/// the same rounding, so totals can differ from the unstratified rule by
/// at most one per class.
pub fn split_indices(
    labels: &[PatternClass],
    train_fraction: f64,
    seed: u64,
    stratified: bool,
) -> Result<SplitIndices> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(DatasetError::TrainFraction(train_fraction));
    }
    let total = labels.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut train, mut test) = (Vec::new(), Vec::new());
    let groups: Vec<Vec<usize>> = if stratified {
        PatternClass::ALL
            .iter()
            .map(|&c| (0..total).filter(|&i| labels[i] == c).collect())
            .collect()
    } else {
        vec![(0..total).collect()]
    };
    for mut g in groups {
        g.shuffle(&mut rng);
        let n_train = (train_fraction * g.len() as f64).round() as usize;
        train.extend_from_slice(&g[..n_train]);
        test.extend_from_slice(&g[n_train..]);
    }
    if train.is_empty() || test.is_empty() {
        return Err(DatasetError::EmptySplit {
            total,
            train: train.len(),
            test: test.len(),
        });
    }
    Ok(SplitIndices { train, test })
}

/// Unstratified random split of a dataset.
pub fn train_test_split(
    ds: &PatternDataset,
    train_fraction: f64,
    seed: u64,
) -> Result<(PatternDataset, PatternDataset)> {
    let s = split_indices(&ds.labels(), train_fraction, seed, false)?;
    Ok((ds.subset(&s.train)?, ds.subset(&s.test)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{ImageMeta, LabeledImage, PatternImage};
    use proptest::prelude::*;

    fn dataset(counts: [usize; 3]) -> PatternDataset {
        let mut images = Vec::new();
        for c in PatternClass::ALL {
            for k in 0..counts[c.index()] {
                images.push(LabeledImage {
                    name: format!("{c}{k}"),
                    image: PatternImage::new(1, vec![k as f64 / 1e5]).unwrap(),
                    label: c,
                    meta: ImageMeta::default(),
                });
            }
        }
        PatternDataset::new(images).unwrap()
    }

    #[test]
    fn default_balance_uses_smallest_class() {
        let b = balance(&dataset([9362, 3725, 13793]), 1, None).unwrap();
        assert_eq!(b.label_counts(), [3725; 3]);
        let b = balance(&dataset([9362, 3725, 13793]), 1, Some(3720)).unwrap();
        assert_eq!(b.len(), 11160);
    }

    #[test]
    fn already_balanced_is_unchanged() {
        let ds = dataset([2, 2, 2]);
        assert_eq!(balance(&ds, 5, None).unwrap(), ds);
    }

    #[test]
    fn balance_errors() {
        assert!(matches!(balance(&dataset([3, 0, 3]), 0, None), Err(DatasetError::MissingClass(PatternClass::Mixed))));
        assert!(matches!(
            balance(&dataset([3, 2, 3]), 0, Some(3)),
            Err(DatasetError::PerClassTooLarge { available: 2, .. })
        ));
    }

    #[test]
    fn split_sizes() {
        let labels = vec![PatternClass::Dots; 26880];
        let s = split_indices(&labels, 0.8, 3, false).unwrap();
        assert_eq!((s.train.len(), s.test.len()), (21504, 5376));
        let ds = dataset([4, 3, 3]);
        let (tr, te) = train_test_split(&ds, 0.8, 9).unwrap();
        assert_eq!((tr.len(), te.len()), (8, 2));
        assert_eq!(train_test_split(&ds, 0.8, 9).unwrap(), (tr, te));
    }

    #[test]
    fn split_errors() {
        let labels = vec![PatternClass::Dots; 3];
        assert!(matches!(split_indices(&labels, 1.0, 0, false), Err(DatasetError::TrainFraction(_))));
        assert!(matches!(split_indices(&labels, 0.01, 0, false), Err(DatasetError::EmptySplit { .. })));
    }

    proptest! {
        #[test]
        fn balance_output_is_equal_and_drawn_from_input(a in 1usize..30, b in 1usize..30, c in 1usize..30, seed: u64) {
            let ds = dataset([a, b, c]);
            let out = balance(&ds, seed, None).unwrap();
            let m = a.min(b).min(c);
            prop_assert_eq!(out.label_counts(), [m, m, m]);
            for li in out.images() {
                prop_assert!(ds.images().contains(li));
            }
        }

        #[test]
        fn split_is_a_partition(m in 2usize..200, frac in 0.05f64..0.95, seed: u64, strat: bool) {
            let labels: Vec<PatternClass> = (0..m).map(|i| PatternClass::ALL[i % 3]).collect();
            if let Ok(s) = split_indices(&labels, frac, seed, strat) {
                let mut all: Vec<usize> = s.train.iter().chain(&s.test).copied().collect();
                all.sort_unstable();
                prop_assert_eq!(all, (0..m).collect::<Vec<_>>());
                if !strat {
                    prop_assert_eq!(s.train.len(), (frac * m as f64).round() as usize);
                }
            }
        }
    }
}
