use super::{ClassifyError, FeatureMatrix, Result};
use crate::class::{argmax_lowest, PatternClass};

/// Relative variance floor against the feature's variance over all samples.
const VARIANCE_FLOOR: f64 = 1e-9;

/// Gaussian naive Bayes: independent per-class normal densities per feature.
///
/// Classes absent from training are never predicted. Variances are sample
/// variances floored at `1e-9 ×` the feature's overall variance; a feature
/// that is constant over the whole training set is ignored.
#[derive(Debug, Clone, PartialEq)]
pub struct GnbModel {
    /// `[class][feature]`
    means: [Vec<f64>; 3],
    variances: [Vec<f64>; 3],
    /// `-inf` for classes absent from training
    log_priors: [f64; 3],
}

fn sample_variance(xs: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = xs.clone().count() as f64;
    let mean = xs.clone().sum::<f64>() / n;
    let var = xs.map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

impl GnbModel {
    pub fn fit(f: &FeatureMatrix) -> Result<Self> {
        let counts = f.class_counts();
        for c in PatternClass::ALL {
            let n = counts[c.index()];
            if n == 1 {
                return Err(ClassifyError::TooFewSamples { class: c, count: n });
            }
        }
        let r = f.features();
        let m = f.samples();
        let mut means: [Vec<f64>; 3] = Default::default();
        let mut variances: [Vec<f64>; 3] = Default::default();
        for feat in 0..r {
            let all = (0..m).map(|j| f.coords().get(feat, j));
            let (_, global) = if m > 1 { sample_variance(all) } else { (0.0, 0.0) };
            for c in PatternClass::ALL {
                if counts[c.index()] == 0 {
                    means[c.index()].push(0.0);
                    variances[c.index()].push(1.0);
                    continue;
                }
                let xs = (0..m)
                    .filter(|&j| f.labels()[j] == c)
                    .map(|j| f.coords().get(feat, j));
                let (mu, var) = sample_variance(xs);
                let var = if global > 0.0 {
                    var.max(VARIANCE_FLOOR * global)
                } else {
                    1.0
                };
                means[c.index()].push(mu);
                variances[c.index()].push(var);
            }
        }
        let log_priors = counts.map(|n| {
            if n == 0 {
                f64::NEG_INFINITY
            } else {
                (n as f64 / m as f64).ln()
            }
        });
        Ok(GnbModel {
            means,
            variances,
            log_priors,
        })
    }

    pub(crate) fn from_parts(means: [Vec<f64>; 3], variances: [Vec<f64>; 3], log_priors: [f64; 3]) -> Self {
        GnbModel {
            means,
            variances,
            log_priors,
        }
    }

    pub fn means(&self) -> &[Vec<f64>; 3] {
        &self.means
    }

    pub fn variances(&self) -> &[Vec<f64>; 3] {
        &self.variances
    }

    pub fn log_priors(&self) -> &[f64; 3] {
        &self.log_priors
    }

    pub fn features(&self) -> usize {
        self.means[0].len()
    }

    /// Log prior plus summed log densities, per class.
    pub fn scores(&self, x: &[f64]) -> [f64; 3] {
        let ln_2pi = (2.0 * std::f64::consts::PI).ln();
        std::array::from_fn(|c| {
            if self.log_priors[c] == f64::NEG_INFINITY {
                return f64::NEG_INFINITY;
            }
            let ll: f64 = x
                .iter()
                .zip(&self.means[c])
                .zip(&self.variances[c])
                .map(|((v, mu), var)| -0.5 * (ln_2pi + var.ln()) - (v - mu).powi(2) / (2.0 * var))
                .sum();
            self.log_priors[c] + ll
        })
    }

    pub fn predict(&self, x: &[f64]) -> PatternClass {
        PatternClass::ALL[argmax_lowest(&self.scores(x))]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::DenseMatrix;
    use PatternClass::*;

    fn fm1(xs: &[f64], labels: &[PatternClass]) -> FeatureMatrix {
        FeatureMatrix::new(DenseMatrix::from_col_major(1, xs.len(), xs.to_vec()).unwrap(), labels.to_vec()).unwrap()
    }

    #[test]
    fn matches_closed_form_posterior() {
        // A ~ N(0, 1) and C ~ N(6, 4) in sample statistics, priors 3/7 and 4/7
        let xs = [-1.0, 0.0, 1.0, 6.0 - 2.0 * 1.5f64.sqrt(), 6.0, 6.0, 6.0 + 2.0 * 1.5f64.sqrt()];
        let labels = [Dots, Dots, Dots, Fingers, Fingers, Fingers, Fingers];
        let m = GnbModel::fit(&fm1(&xs, &labels)).unwrap();
        assert!((m.variances()[0][0] - 1.0).abs() < 1e-12);
        assert!((m.variances()[2][0] - 4.0).abs() < 1e-12);
        let log_post = |x: f64, mu: f64, var: f64, prior: f64| {
            prior.ln() - 0.5 * (2.0 * std::f64::consts::PI * var).ln() - (x - mu).powi(2) / (2.0 * var)
        };
        for q in [-3.0, 0.5, 2.0, 2.5, 3.0, 4.0, 9.0, 20.0] {
            let a = log_post(q, 0.0, 1.0, 3.0 / 7.0);
            let c = log_post(q, 6.0, 4.0, 4.0 / 7.0);
            let expected = if c > a { Fingers } else { Dots };
            assert_eq!(m.predict(&[q]), expected, "query {q}");
        }
    }

    #[test]
    fn symmetric_tie_goes_to_lowest_class() {
        let m = GnbModel::fit(&fm1(&[-2.0, 0.0, 0.0, 2.0], &[Mixed, Mixed, Fingers, Fingers])).unwrap();
        // both classes have variance 2 and means -1 / +1
        assert_eq!(m.predict(&[0.0]), Mixed);
    }

    #[test]
    fn query_at_class_mean() {
        let m = GnbModel::fit(&fm1(&[0.0, 1.0, 5.0, 6.0, 10.0, 11.0], &[Dots, Dots, Mixed, Mixed, Fingers, Fingers])).unwrap();
        assert_eq!(m.predict(&[0.5]), Dots);
        assert_eq!(m.predict(&[5.5]), Mixed);
        assert_eq!(m.predict(&[10.5]), Fingers);
    }

    #[test]
    fn constant_class_feature_is_floored_not_an_error() {
        let cols = vec![vec![1.0, 0.0], vec![1.0, 1.0], vec![3.0, 0.0], vec![4.0, 1.0]];
        let f = FeatureMatrix::new(DenseMatrix::from_columns(&cols).unwrap(), vec![Dots, Dots, Fingers, Fingers]).unwrap();
        let m = GnbModel::fit(&f).unwrap();
        assert!(m.variances()[0][0] > 0.0);
        assert_eq!(m.predict(&[1.0, 0.5]), Dots);
    }

    #[test]
    fn single_sample_class_rejected() {
        assert!(matches!(
            GnbModel::fit(&fm1(&[0.0, 1.0, 2.0], &[Dots, Dots, Mixed])),
            Err(ClassifyError::TooFewSamples { class: Mixed, count: 1 })
        ));
    }
}
