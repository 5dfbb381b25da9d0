//! The end-to-end workflow: data matrix (raw pixels or FFT magnitudes),
//! randomized SVD on the training split, truncation and projection,
//! optional normalization, classifier fit and evaluation, repeated over
//! independent random splits.

use std::fmt::{self, Write as _};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::class::PatternClass;
use crate::classify::{
    Classifier, ClassifierKind, ClassifierParams, ClassifyError, FeatureMatrix, Preprocessing, Provenance,
    TrainedModel,
};
use crate::dataset::{
    apply_normalization, balance, fft_magnitude, fit_normalization, inverse_fft_zero_phase, split_indices,
    to_data_matrix, DatasetError, NormalizationStats, PatternDataset, PatternImage,
};
use crate::linalg::{project, randomized_svd, DenseMatrix, LinalgError, RsvdParams, SvdFactorization};
use crate::metrics::{
    accumulate, aggregate_cycles, compute_metrics, ConfusionMatrix3, CycleSummary, MetricsError, MetricsReport,
};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("dataset: {0}")]
    Dataset(#[from] DatasetError),
    #[error("linear algebra: {0}")]
    Linalg(#[from] LinalgError),
    #[error("classifier: {0}")]
    Classify(#[from] ClassifyError),
    #[error("metrics: {0}")]
    Metrics(#[from] MetricsError),
}

pub type Result<T> = std::result::Result<T, PipelineError>;

/// Raw pixels (plain) or 2-D FFT magnitudes (fft) as the data matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Plain,
    Fft,
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::Plain => "plain",
            Variant::Fft => "fft",
        })
    }
}

impl FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "plain" | "a" => Ok(Variant::Plain),
            "fft" | "b" => Ok(Variant::Fft),
            other => Err(format!("unknown variant {other:?} (expected plain or fft)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub variant: Variant,
    pub target_rank: usize,
    pub rank: usize,
    pub classifier: ClassifierKind,
    pub params: ClassifierParams,
    pub balance: bool,
    pub per_class: Option<usize>,
    pub normalize: bool,
    pub train_fraction: f64,
    pub cycles: usize,
    pub seed: u64,
    pub stratified: bool,
    pub oversampling: usize,
    pub power_iterations: usize,
}

impl Default for RunConfig {
    /// fft variant, k = 50, r = 7, 1-NN, unbalanced, not normalized.
    fn default() -> Self {
        RunConfig {
            variant: Variant::Fft,
            target_rank: 50,
            rank: 7,
            classifier: ClassifierKind::Knn,
            params: ClassifierParams::default(),
            balance: false,
            per_class: None,
            normalize: false,
            train_fraction: 0.8,
            cycles: 5,
            seed: 0,
            stratified: false,
            oversampling: 10,
            power_iterations: 1,
        }
    }
}

fn parse_bool(v: &str) -> std::result::Result<bool, String> {
    match v.trim().to_ascii_lowercase().as_str() {
        "1" | "true" | "yes" | "on" => Ok(true),
        "0" | "false" | "no" | "off" => Ok(false),
        other => Err(format!("expected a boolean, found {other:?}")),
    }
}

fn parse_num<T: FromStr>(v: &str) -> std::result::Result<T, String>
where
    T::Err: fmt::Display,
{
    v.trim().parse().map_err(|e| format!("{v:?}: {e}"))
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(PipelineError::Config(m));
        if self.target_rank == 0 {
            return bad("target rank must be at least 1".into());
        }
        if self.rank == 0 || self.rank > self.target_rank {
            return bad(format!(
                "truncation rank r = {} must lie in 1..=k (k = {})",
                self.rank, self.target_rank
            ));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return bad(format!("train fraction {} outside (0, 1)", self.train_fraction));
        }
        if self.cycles == 0 {
            return bad("cycles must be at least 1".into());
        }
        if self.params.neighbors == 0 {
            return bad("neighbors must be at least 1".into());
        }
        if self.params.min_leaf == 0 {
            return bad("min_leaf must be at least 1".into());
        }
        if self.per_class == Some(0) {
            return bad("per_class must be at least 1".into());
        }
        Ok(())
    }

    /// Sets one `key = value` pair.
    pub fn set(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        let v = value.trim();
        match key.trim().replace('-', "_").as_str() {
            "variant" => self.variant = v.parse()?,
            "target_rank" | "k" => self.target_rank = parse_num(v)?,
            "rank" | "r" => self.rank = parse_num(v)?,
            "classifier" => self.classifier = v.parse()?,
            "neighbors" => self.params.neighbors = parse_num(v)?,
            "max_depth" => self.params.max_depth = parse_num(v)?,
            "min_leaf" => self.params.min_leaf = parse_num(v)?,
            "balance" => self.balance = parse_bool(v)?,
            "per_class" => {
                self.per_class = match v {
                    "" | "none" => None,
                    _ => Some(parse_num(v)?),
                }
            }
            "normalize" => self.normalize = parse_bool(v)?,
            "train_fraction" => self.train_fraction = parse_num(v)?,
            "cycles" => self.cycles = parse_num(v)?,
            "seed" => self.seed = parse_num(v)?,
            "stratified" => self.stratified = parse_bool(v)?,
            "oversampling" => self.oversampling = parse_num(v)?,
            "power_iterations" => self.power_iterations = parse_num(v)?,
            other => return Err(format!("unknown key {other:?}")),
        }
        Ok(())
    }

    /// Applies a flat `key = value` text (`#` starts a comment).
    pub fn apply_kv(&mut self, text: &str) -> std::result::Result<(), String> {
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| format!("line {}: expected key = value", n + 1))?;
            self.set(k, v).map_err(|e| format!("line {}: {e}", n + 1))?;
        }
        Ok(())
    }

    pub fn to_kv(&self) -> String {
        let mut s = String::new();
        let per_class = self.per_class.map_or("none".to_string(), |p| p.to_string());
        let _ = writeln!(s, "variant = {}", self.variant);
        let _ = writeln!(s, "target_rank = {}", self.target_rank);
        let _ = writeln!(s, "rank = {}", self.rank);
        let _ = writeln!(s, "classifier = {}", self.classifier);
        let _ = writeln!(s, "neighbors = {}", self.params.neighbors);
        let _ = writeln!(s, "max_depth = {}", self.params.max_depth);
        let _ = writeln!(s, "min_leaf = {}", self.params.min_leaf);
        let _ = writeln!(s, "balance = {}", self.balance);
        let _ = writeln!(s, "per_class = {per_class}");
        let _ = writeln!(s, "normalize = {}", self.normalize);
        let _ = writeln!(s, "train_fraction = {}", self.train_fraction);
        let _ = writeln!(s, "cycles = {}", self.cycles);
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "stratified = {}", self.stratified);
        let _ = writeln!(s, "oversampling = {}", self.oversampling);
        let _ = writeln!(s, "power_iterations = {}", self.power_iterations);
        s
    }

    fn rsvd_params(&self, seed: u64) -> RsvdParams {
        RsvdParams {
            target_rank: self.target_rank,
            oversampling: self.oversampling,
            power_iterations: self.power_iterations,
            seed,
        }
    }
}

/// One column per image: pixels or FFT magnitudes.
pub fn data_matrix(ds: &PatternDataset, variant: Variant) -> DenseMatrix {
    match variant {
        Variant::Plain => to_data_matrix(ds),
        Variant::Fft => fft_magnitude(ds),
    }
}

/// Balanced copy when requested, otherwise a clone.
pub fn prepare_dataset(ds: &PatternDataset, cfg: &RunConfig) -> Result<PatternDataset> {
    if cfg.balance {
        Ok(balance(ds, balance_seed(cfg.seed), cfg.per_class)?)
    } else {
        Ok(ds.clone())
    }
}

fn balance_seed(seed: u64) -> u64 {
    ChaCha8Rng::seed_from_u64(seed).random()
}

/// Split and rSVD seeds of one cycle (independent stream per cycle).
fn cycle_seeds(seed: u64, cycle: usize) -> (u64, u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(cycle as u64 + 1);
    (rng.random(), rng.random())
}

/// Reduced data of one cycle at the full target rank.
struct CycleData {
    basis: DenseMatrix,
    train: DenseMatrix,
    test: DenseMatrix,
    train_labels: Vec<PatternClass>,
    test_labels: Vec<PatternClass>,
    /// normalization of all `k` coordinates; leading entries serve any `r`
    norm: Option<NormalizationStats>,
    sigma: Vec<f64>,
}

impl CycleData {
    fn compute(x: &DenseMatrix, labels: &[PatternClass], cfg: &RunConfig, cycle: usize) -> Result<Self> {
        let (split_seed, rsvd_seed) = cycle_seeds(cfg.seed, cycle);
        let split = split_indices(labels, cfg.train_fraction, split_seed, cfg.stratified)?;
        let x_train = x.select_columns(&split.train);
        let x_test = x.select_columns(&split.test);
        let fac: SvdFactorization = randomized_svd(&x_train, cfg.rsvd_params(rsvd_seed))?;
        let basis = fac.u().clone();
        let train = project(&basis, &x_train)?;
        let test = project(&basis, &x_test)?;
        let norm = if cfg.normalize {
            Some(fit_normalization(&train)?)
        } else {
            None
        };
        Ok(CycleData {
            basis,
            train,
            test,
            train_labels: split.train.iter().map(|&i| labels[i]).collect(),
            test_labels: split.test.iter().map(|&i| labels[i]).collect(),
            norm,
            sigma: fac.sigma().to_vec(),
        })
    }

    fn norm_at(&self, r: usize) -> Result<Option<NormalizationStats>> {
        Ok(match &self.norm {
            Some(n) => Some(NormalizationStats::new(n.mean()[..r].to_vec(), n.std()[..r].to_vec())?),
            None => None,
        })
    }

    /// Fits `kind` on the leading `r` coordinates and scores the test split.
    fn evaluate(
        &self,
        r: usize,
        kind: ClassifierKind,
        params: &ClassifierParams,
    ) -> Result<(Classifier, Option<NormalizationStats>, ConfusionMatrix3)> {
        let norm = self.norm_at(r)?;
        let mut train = self.train.leading_rows(r);
        let mut test = self.test.leading_rows(r);
        if let Some(n) = &norm {
            train = apply_normalization(n, &train)?;
            test = apply_normalization(n, &test)?;
        }
        let clf = Classifier::fit(kind, params, &FeatureMatrix::new(train, self.train_labels.clone())?)?;
        let pred = clf.predict_all(&test)?;
        Ok((clf, norm, accumulate(&self.test_labels, &pred)?))
    }
}

/// Result of [`fit_cycles`].
#[derive(Debug, Clone)]
pub struct FitOutcome {
    pub reports: Vec<MetricsReport>,
    pub confusions: Vec<ConfusionMatrix3>,
    pub summary: CycleSummary,
    /// model of the first cycle
    pub model: TrainedModel,
    /// singular values of the first cycle's rSVD
    pub sigma: Vec<f64>,
}

/// Runs `cfg.cycles` independent split / rSVD / fit / evaluate cycles.
/// Balancing (if any) happens once, before splitting.
pub fn fit_cycles(ds: &PatternDataset, cfg: &RunConfig) -> Result<FitOutcome> {
    cfg.validate()?;
    let ds = prepare_dataset(ds, cfg)?;
    let x = data_matrix(&ds, cfg.variant);
    let labels = ds.labels();
    let digest = ds.digest();

    let mut reports = Vec::with_capacity(cfg.cycles);
    let mut confusions = Vec::with_capacity(cfg.cycles);
    let mut first = None;
    for cycle in 0..cfg.cycles {
        let data = CycleData::compute(&x, &labels, cfg, cycle)?;
        let (clf, norm, cm) = data.evaluate(cfg.rank, cfg.classifier, &cfg.params)?;
        let report = compute_metrics(&cm)?;
        log::info!("cycle {}: {}", cycle + 1, crate::metrics::format_report(&report));
        reports.push(report);
        confusions.push(cm);
        if first.is_none() {
            let model = TrainedModel::new(
                Preprocessing {
                    use_fft: cfg.variant == Variant::Fft,
                    normalization: norm,
                },
                data.basis.leading_columns(cfg.rank),
                clf,
                Provenance {
                    seed: cfg.seed,
                    target_rank: cfg.target_rank,
                    truncation_rank: cfg.rank,
                    dataset_digest: digest.clone(),
                },
            )?;
            first = Some((model, data.sigma.clone()));
        }
    }
    let summary = aggregate_cycles(&reports)?;
    let (model, sigma) = first.expect("at least one cycle");
    Ok(FitOutcome {
        reports,
        confusions,
        summary,
        model,
        sigma,
    })
}

/// One aggregate row of a truncation-rank sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub r: usize,
    pub classifier: ClassifierKind,
    pub mean_error: f64,
    pub std_error: f64,
    #[serde(rename = "mean_recall_A")]
    pub mean_recall_a: f64,
    #[serde(rename = "mean_recall_B")]
    pub mean_recall_b: f64,
    #[serde(rename = "mean_recall_C")]
    pub mean_recall_c: f64,
}

/// Error and recalls for every `r` in `ranks` and every classifier in
/// `classifiers`, each aggregated over `cfg.cycles` cycles. One rSVD per
/// cycle at `cfg.target_rank` serves all ranks. Rows are ordered by `r`,
/// then by the order of `classifiers`.
pub fn sweep(
    ds: &PatternDataset,
    cfg: &RunConfig,
    ranks: &[usize],
    classifiers: &[ClassifierKind],
) -> Result<Vec<SweepRow>> {
    cfg.validate()?;
    if ranks.is_empty() || classifiers.is_empty() {
        return Err(PipelineError::Config("empty sweep".into()));
    }
    if let Some(&r) = ranks.iter().find(|&&r| r == 0 || r > cfg.target_rank) {
        return Err(PipelineError::Config(format!(
            "sweep rank {r} outside 1..=k (k = {})",
            cfg.target_rank
        )));
    }
    let ds = prepare_dataset(ds, cfg)?;
    let x = data_matrix(&ds, cfg.variant);
    let labels = ds.labels();

    let mut per_cell: Vec<Vec<MetricsReport>> = vec![Vec::with_capacity(cfg.cycles); ranks.len() * classifiers.len()];
    for cycle in 0..cfg.cycles {
        let data = CycleData::compute(&x, &labels, cfg, cycle)?;
        for (i, &r) in ranks.iter().enumerate() {
            for (j, &kind) in classifiers.iter().enumerate() {
                let (_, _, cm) = data.evaluate(r, kind, &cfg.params)?;
                per_cell[i * classifiers.len() + j].push(compute_metrics(&cm)?);
            }
        }
    }
    let mut rows = Vec::with_capacity(per_cell.len());
    for (i, &r) in ranks.iter().enumerate() {
        for (j, &kind) in classifiers.iter().enumerate() {
            let s = aggregate_cycles(&per_cell[i * classifiers.len() + j])?;
            rows.push(SweepRow {
                r,
                classifier: kind,
                mean_error: s.error.mean,
                std_error: s.error.std,
                mean_recall_a: s.recall_a.mean,
                mean_recall_b: s.recall_b.mean,
                mean_recall_c: s.recall_c.mean,
            });
        }
    }
    Ok(rows)
}

pub fn sweep_to_csv(rows: &[SweepRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row).expect("in-memory csv");
    }
    String::from_utf8(w.into_inner().expect("in-memory csv")).expect("utf-8 csv")
}

pub fn parse_sweep_csv(text: &str) -> std::result::Result<Vec<SweepRow>, csv::Error> {
    csv::Reader::from_reader(text.as_bytes()).deserialize().collect()
}

/// Smallest `r` whose mean error is within `tolerance` percentage points of
/// the lowest mean error reached by `classifier` anywhere in the sweep.
pub fn plateau_rank(rows: &[SweepRow], classifier: ClassifierKind, tolerance: f64) -> Option<usize> {
    let mine: Vec<&SweepRow> = rows.iter().filter(|r| r.classifier == classifier).collect();
    let best = mine.iter().map(|r| r.mean_error).fold(f64::INFINITY, f64::min);
    mine.iter()
        .filter(|r| r.mean_error <= best + tolerance)
        .map(|r| r.r)
        .min()
}

/// rSVD of the whole (optionally balanced) dataset, for mode inspection.
pub fn dataset_modes(ds: &PatternDataset, cfg: &RunConfig) -> Result<SvdFactorization> {
    cfg.validate()?;
    let ds = prepare_dataset(ds, cfg)?;
    let x = data_matrix(&ds, cfg.variant);
    Ok(randomized_svd(&x, cfg.rsvd_params(cycle_seeds(cfg.seed, 0).1))?)
}

/// Mode as a spatial image, min-max scaled to [0, 1]. FFT modes are first
/// taken through the zero-phase inverse transform. A constant mode renders
/// as a constant image.
pub fn render_mode(mode: &[f64], side: usize, variant: Variant) -> PatternImage {
    let spatial = match variant {
        Variant::Fft => inverse_fft_zero_phase(mode, side),
        Variant::Plain => mode.to_vec(),
    };
    let lo = spatial.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = spatial.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = hi - lo;
    let scale = if span > 1e-12 * hi.abs().max(lo.abs()).max(f64::MIN_POSITIVE) {
        1.0 / span
    } else {
        0.0
    };
    let pixels = spatial
        .iter()
        .map(|v| if scale > 0.0 { ((v - lo) * scale).clamp(0.0, 1.0) } else { 0.5 })
        .collect();
    PatternImage::new(side, pixels).expect("scaled to [0, 1]")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::gen_dataset;

    fn small_cfg() -> RunConfig {
        RunConfig {
            target_rank: 12,
            cycles: 2,
            seed: 3,
            ..RunConfig::default()
        }
    }

    #[test]
    fn config_validation() {
        assert!(RunConfig::default().validate().is_ok());
        let bad = [
            RunConfig { rank: 51, ..RunConfig::default() },
            RunConfig { rank: 0, ..RunConfig::default() },
            RunConfig { train_fraction: 1.0, ..RunConfig::default() },
            RunConfig { cycles: 0, ..RunConfig::default() },
        ];
        for c in bad {
            assert!(matches!(c.validate(), Err(PipelineError::Config(_))), "{c:?}");
        }
    }

    #[test]
    fn config_kv_round_trip() {
        let mut c = RunConfig::default();
        c.apply_kv("# comment\nvariant = plain\nrank=3\nclassifier = lda\nbalance = yes\nper_class = 4\nseed = 9 # inline\n")
            .unwrap();
        assert_eq!(c.variant, Variant::Plain);
        assert_eq!((c.rank, c.classifier, c.balance, c.per_class, c.seed), (3, ClassifierKind::Lda, true, Some(4), 9));
        let mut d = RunConfig::default();
        d.apply_kv(&c.to_kv()).unwrap();
        assert_eq!(c, d);
        assert!(RunConfig::default().apply_kv("bogus = 1").is_err());
        assert!(RunConfig::default().apply_kv("rank").is_err());
    }

    #[test]
    fn rank_above_target_rank_fails_before_work() {
        let ds = gen_dataset(2, 32, 1).unwrap();
        let cfg = RunConfig { rank: 60, ..RunConfig::default() };
        assert!(matches!(fit_cycles(&ds, &cfg), Err(PipelineError::Config(_))));
    }

    #[test]
    fn fit_is_deterministic_and_separates_classes() {
        let ds = gen_dataset(30, 32, 11).unwrap();
        let a = fit_cycles(&ds, &small_cfg()).unwrap();
        let b = fit_cycles(&ds, &small_cfg()).unwrap();
        assert_eq!(a.reports, b.reports);
        assert_eq!(a.model, b.model);
        assert_eq!(a.reports.len(), 2);
        assert!(a.summary.error.mean < 20.0, "{:?}", a.summary);
        assert_eq!(a.model.basis().cols(), 7);
    }

    #[test]
    fn model_predictions_match_pipeline_features() {
        // library-level predict on an image equals fitting on projected coordinates
        let ds = gen_dataset(20, 32, 4).unwrap();
        for variant in [Variant::Plain, Variant::Fft] {
            for normalize in [false, true] {
                let cfg = RunConfig {
                    variant,
                    normalize,
                    cycles: 1,
                    ..small_cfg()
                };
                let out = fit_cycles(&ds, &cfg).unwrap();
                let x = data_matrix(&ds, variant);
                let mut coords = project(out.model.basis(), &x).unwrap();
                if let Some(n) = &out.model.preprocessing().normalization {
                    coords = apply_normalization(n, &coords).unwrap();
                }
                let direct = out.model.classifier().predict_all(&coords).unwrap();
                for (li, d) in ds.images().iter().zip(direct) {
                    assert_eq!(out.model.predict(&li.image).unwrap(), d);
                }
            }
        }
    }

    #[test]
    fn sweep_rows_and_csv() {
        let ds = gen_dataset(15, 32, 2).unwrap();
        let ranks: Vec<usize> = (1..=10).collect();
        let rows = sweep(&ds, &small_cfg(), &ranks, &ClassifierKind::ALL).unwrap();
        assert_eq!(rows.len(), 40);
        assert_eq!(parse_sweep_csv(&sweep_to_csv(&rows)).unwrap(), rows);
        assert!(plateau_rank(&rows, ClassifierKind::Knn, 1.0).is_some());
        assert!(sweep(&ds, &small_cfg(), &[13], &ClassifierKind::ALL).is_err());

        // the sweep's r = 7 kNN row matches a plain fit with the same config
        let fit = fit_cycles(&ds, &small_cfg()).unwrap();
        let row = rows.iter().find(|r| r.r == 7 && r.classifier == ClassifierKind::Knn).unwrap();
        assert_eq!(row.mean_error, fit.summary.error.mean);
    }

    #[test]
    fn plain_first_mode_follows_the_mean_image() {
        let ds = gen_dataset(20, 32, 8).unwrap();
        let cfg = RunConfig {
            variant: Variant::Plain,
            ..small_cfg()
        };
        let fac = dataset_modes(&ds, &cfg).unwrap();
        let x = to_data_matrix(&ds);
        let n = x.rows();
        let mean: Vec<f64> = (0..n).map(|i| x.row(i).iter().sum::<f64>() / x.cols() as f64).collect();
        let u1 = fac.u().column(0);
        let dot: f64 = u1.iter().zip(&mean).map(|(a, b)| a * b).sum();
        let cos = dot / (mean.iter().map(|v| v * v).sum::<f64>().sqrt());
        assert!(cos >= 0.99, "{cos}");
    }

    #[test]
    fn dc_only_fft_mode_renders_constant() {
        let mut mode = vec![0.0; 64];
        mode[0] = 1.0;
        let img = render_mode(&mode, 8, Variant::Fft);
        assert!(img.pixels().windows(2).all(|w| w[0] == w[1]));
        let ramp: Vec<f64> = (0..64).map(|i| i as f64 - 10.0).collect();
        let img = render_mode(&ramp, 8, Variant::Plain);
        assert_eq!((img.pixels()[0], img.pixels()[63]), (0.0, 1.0));
    }

    #[test]
    fn balancing_equalizes_counts() {
        let ds = crate::synth::gen_dataset_from(&crate::synth::DatasetRecipe {
            counts: [7, 3, 9],
            ..crate::synth::DatasetRecipe::balanced(1, 32, 0)
        })
        .unwrap();
        let cfg = RunConfig { balance: true, ..small_cfg() };
        assert_eq!(prepare_dataset(&ds, &cfg).unwrap().label_counts(), [3, 3, 3]);
    }
}
