//! Three-class confusion matrix, accuracy/error/recall percentages and
//! aggregation over repeated training cycles.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::class::PatternClass;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("truth has {truth} entries but predictions have {pred}")]
    LengthMismatch { truth: usize, pred: usize },
    #[error("confusion matrix is empty")]
    Empty,
    #[error("recall of class {0} is undefined: no ground-truth samples")]
    UndefinedRecall(PatternClass),
    #[error("no cycle reports to aggregate")]
    NoCycles,
}

/// Rows are ground truth, columns predictions, both in A, B, C order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionMatrix3 {
    counts: [[u64; 3]; 3],
}

impl ConfusionMatrix3 {
    pub fn from_counts(counts: [[u64; 3]; 3]) -> Self {
        ConfusionMatrix3 { counts }
    }

    pub fn counts(&self) -> &[[u64; 3]; 3] {
        &self.counts
    }

    pub fn get(&self, truth: PatternClass, pred: PatternClass) -> u64 {
        self.counts[truth.index()][pred.index()]
    }

    pub fn add(&mut self, truth: PatternClass, pred: PatternClass) {
        self.counts[truth.index()][pred.index()] += 1;
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..3).map(|i| self.counts[i][i]).sum()
    }

    pub fn row_sum(&self, truth: PatternClass) -> u64 {
        self.counts[truth.index()].iter().sum()
    }

    /// CSV with a `truth` column and one column per predicted class.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("truth,pred_A,pred_B,pred_C\n");
        for c in PatternClass::ALL {
            let r = self.counts[c.index()];
            let _ = writeln!(s, "{c},{},{},{}", r[0], r[1], r[2]);
        }
        s
    }
}

pub fn accumulate(truth: &[PatternClass], pred: &[PatternClass]) -> Result<ConfusionMatrix3, MetricsError> {
    if truth.len() != pred.len() {
        return Err(MetricsError::LengthMismatch {
            truth: truth.len(),
            pred: pred.len(),
        });
    }
    let mut cm = ConfusionMatrix3::default();
    for (&t, &p) in truth.iter().zip(pred) {
        cm.add(t, p);
    }
    Ok(cm)
}

/// Percentages at full precision; `error == 100 − accuracy` exactly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub accuracy: f64,
    pub error: f64,
    pub recall_a: f64,
    pub recall_b: f64,
    pub recall_c: f64,
    pub sample_count: u64,
}

impl MetricsReport {
    pub fn recall(&self, c: PatternClass) -> f64 {
        match c {
            PatternClass::Dots => self.recall_a,
            PatternClass::Mixed => self.recall_b,
            PatternClass::Fingers => self.recall_c,
        }
    }
}

/// Accuracy, error and the three per-class recalls, in percent.
pub fn compute_metrics(cm: &ConfusionMatrix3) -> Result<MetricsReport, MetricsError> {
    let total = cm.total();
    if total == 0 {
        return Err(MetricsError::Empty);
    }
    let recall = |c: PatternClass| {
        let row = cm.row_sum(c);
        if row == 0 {
            Err(MetricsError::UndefinedRecall(c))
        } else {
            Ok(100.0 * cm.get(c, c) as f64 / row as f64)
        }
    };
    let accuracy = 100.0 * cm.trace() as f64 / total as f64;
    Ok(MetricsReport {
        accuracy,
        error: 100.0 - accuracy,
        recall_a: recall(PatternClass::Dots)?,
        recall_b: recall(PatternClass::Mixed)?,
        recall_c: recall(PatternClass::Fingers)?,
        sample_count: total,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

fn mean_std(xs: impl Iterator<Item = f64> + Clone) -> MeanStd {
    let n = xs.clone().count() as f64;
    let mean = xs.clone().sum::<f64>() / n;
    let std = if n > 1.0 {
        (xs.map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    MeanStd { mean, std }
}

/// Mean and sample standard deviation of every metric over cycles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CycleSummary {
    pub cycles: usize,
    pub accuracy: MeanStd,
    pub error: MeanStd,
    pub recall_a: MeanStd,
    pub recall_b: MeanStd,
    pub recall_c: MeanStd,
}

pub fn aggregate_cycles(reports: &[MetricsReport]) -> Result<CycleSummary, MetricsError> {
    if reports.is_empty() {
        return Err(MetricsError::NoCycles);
    }
    let it = reports.iter();
    Ok(CycleSummary {
        cycles: reports.len(),
        accuracy: mean_std(it.clone().map(|r| r.accuracy)),
        error: mean_std(it.clone().map(|r| r.error)),
        recall_a: mean_std(it.clone().map(|r| r.recall_a)),
        recall_b: mean_std(it.clone().map(|r| r.recall_b)),
        recall_c: mean_std(it.map(|r| r.recall_c)),
    })
}

/// Per-cycle rows followed by `mean` and `std` rows.
pub fn reports_to_csv(reports: &[MetricsReport], summary: &CycleSummary) -> String {
    let mut s = String::from("cycle,samples,accuracy,error,recall_A,recall_B,recall_C\n");
    for (i, r) in reports.iter().enumerate() {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{}",
            i + 1,
            r.sample_count,
            r.accuracy,
            r.error,
            r.recall_a,
            r.recall_b,
            r.recall_c
        );
    }
    let row = |f: fn(&MeanStd) -> f64| {
        format!(
            "{},{},{},{},{}",
            f(&summary.accuracy),
            f(&summary.error),
            f(&summary.recall_a),
            f(&summary.recall_b),
            f(&summary.recall_c)
        )
    };
    let _ = writeln!(s, "mean,,{}", row(|m| m.mean));
    let _ = writeln!(s, "std,,{}", row(|m| m.std));
    s
}

/// One-decimal table in the style of published metric tables.
pub fn format_report(r: &MetricsReport) -> String {
    format!(
        "accuracy {:.1}%  error {:.1}%  recall A {:.1}%  recall B {:.1}%  recall C {:.1}%  (n = {})",
        r.accuracy, r.error, r.recall_a, r.recall_b, r.recall_c, r.sample_count
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use PatternClass::*;

    fn round1(x: f64) -> f64 {
        (x * 10.0).round() / 10.0
    }

    #[test]
    fn accumulate_small_cases() {
        let cm = accumulate(&[Dots, Mixed, Fingers], &[Dots, Mixed, Fingers]).unwrap();
        assert_eq!(cm.counts(), &[[1, 0, 0], [0, 1, 0], [0, 0, 1]]);
        let cm = accumulate(&[Dots, Dots], &[Mixed, Fingers]).unwrap();
        assert_eq!(cm.counts(), &[[0, 1, 1], [0, 0, 0], [0, 0, 0]]);
        assert!(accumulate(&[Dots], &[]).is_err());
    }

    #[test]
    fn human_benchmark_matrix() {
        let cm = ConfusionMatrix3::from_counts([[9118, 240, 4], [588, 2318, 819], [76, 740, 12977]]);
        let r = compute_metrics(&cm).unwrap();
        assert_eq!(r.sample_count, 26880);
        assert_eq!(
            [r.accuracy, r.error, r.recall_a, r.recall_b, r.recall_c].map(round1),
            [90.8, 9.2, 97.4, 62.2, 94.1]
        );
    }

    #[test]
    fn knn_matrix() {
        let cm = ConfusionMatrix3::from_counts([[1815, 58, 0], [42, 649, 54], [1, 37, 2720]]);
        let r = compute_metrics(&cm).unwrap();
        assert_eq!(r.sample_count, 5376);
        assert_eq!(
            [r.accuracy, r.error, r.recall_a, r.recall_b, r.recall_c].map(round1),
            [96.4, 3.6, 96.9, 87.1, 98.6]
        );
    }

    #[test]
    fn perfect_and_degenerate() {
        let r = compute_metrics(&ConfusionMatrix3::from_counts([[3, 0, 0], [0, 4, 0], [0, 0, 5]])).unwrap();
        assert_eq!([r.accuracy, r.recall_a, r.recall_b, r.recall_c], [100.0; 4]);
        assert_eq!(compute_metrics(&ConfusionMatrix3::default()), Err(MetricsError::Empty));
        let no_b = ConfusionMatrix3::from_counts([[3, 0, 0], [0, 0, 0], [0, 0, 5]]);
        assert_eq!(compute_metrics(&no_b), Err(MetricsError::UndefinedRecall(Mixed)));
    }

    #[test]
    fn aggregate() {
        let rep = |e: f64| MetricsReport {
            accuracy: 100.0 - e,
            error: e,
            recall_a: 100.0,
            recall_b: 100.0,
            recall_c: 100.0,
            sample_count: 10,
        };
        let s = aggregate_cycles(&[rep(3.0); 5]).unwrap();
        assert_eq!((s.error.mean, s.error.std), (3.0, 0.0));
        let s = aggregate_cycles(&[rep(2.0), rep(4.0)]).unwrap();
        assert_eq!(s.error.mean, 3.0);
        assert!((s.error.std - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(aggregate_cycles(&[rep(7.0)]).unwrap().error.std, 0.0);
        assert_eq!(aggregate_cycles(&[]), Err(MetricsError::NoCycles));
    }

    fn class() -> impl Strategy<Value = PatternClass> {
        (0usize..3).prop_map(|i| PatternClass::ALL[i])
    }

    proptest! {
        #[test]
        fn counting_and_permutation(pairs in prop::collection::vec((class(), class()), 1..1000), seed: u64) {
            let (t, p): (Vec<_>, Vec<_>) = pairs.iter().copied().unzip();
            let cm = accumulate(&t, &p).unwrap();
            prop_assert_eq!(cm.total(), pairs.len() as u64);
            let mut shuffled = pairs.clone();
            let k = (seed as usize) % shuffled.len();
            shuffled.rotate_left(k);
            shuffled.reverse();
            let (t2, p2): (Vec<_>, Vec<_>) = shuffled.into_iter().unzip();
            prop_assert_eq!(accumulate(&t2, &p2).unwrap(), cm);
        }

        #[test]
        fn metric_invariants(counts in prop::array::uniform3(prop::array::uniform3(0u64..500)), s in 1u64..50, other in 0u64..500) {
            let cm = ConfusionMatrix3::from_counts(counts);
            let Ok(r) = compute_metrics(&cm) else { return Ok(()) };
            prop_assert_eq!(r.error, 100.0 - r.accuracy);
            prop_assert!((r.accuracy + r.error - 100.0).abs() <= 1e-12);
            for c in PatternClass::ALL {
                prop_assert!((0.0..=100.0).contains(&r.recall(c)));
            }
            let scaled = ConfusionMatrix3::from_counts(counts.map(|row| row.map(|v| v * s)));
            let rs = compute_metrics(&scaled).unwrap();
            prop_assert_eq!([rs.accuracy, rs.recall_a, rs.recall_b, rs.recall_c], [r.accuracy, r.recall_a, r.recall_b, r.recall_c]);
            // recall A only looks at row A
            let mut perturbed = counts;
            perturbed[1][0] += other;
            perturbed[2][2] += other;
            let rp = compute_metrics(&ConfusionMatrix3::from_counts(perturbed)).unwrap();
            prop_assert_eq!(rp.recall_a, r.recall_a);
        }
    }
}
