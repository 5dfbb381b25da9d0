//! `eigenpattern`: train, evaluate and apply eigenpattern classifiers.
//!
//! Exit codes: 0 success, 1 other, 2 validation, 3 ingestion,
//! 4 numerical, 5 output I/O.

mod commands;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use eigenpattern::classify::ClassifierKind;
use eigenpattern::pipeline::{RunConfig, Variant};

use error::Failure;

#[derive(Parser)]
#[command(name = "eigenpattern", version, about = "Eigenpattern classification of printed pattern images")]
struct Cli {
    /// Log progress (per-cycle metrics) to stderr
    #[arg(short, long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a labeled dataset and print its summary
    Ingest(DataArgs),
    /// Train over several random splits; write the model and a metrics report
    Fit(FitArgs),
    /// Test error of every classifier over a range of truncation ranks
    Sweep(SweepArgs),
    /// Write the leading modes as grayscale PNG images
    Modes(ModesArgs),
    /// Classify images with a saved model
    Predict(PredictArgs),
    /// Regime map of a model's predictions over velocity and tonal value
    RegimeMap(RegimeArgs),
    /// Generate a synthetic labeled dataset
    Synth(SynthArgs),
}

#[derive(Args, Clone)]
pub struct DataArgs {
    /// Directory with the image files
    #[arg(long)]
    pub data: PathBuf,
    /// Manifest CSV (default: <data>/manifest.csv)
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

impl DataArgs {
    pub fn manifest_path(&self) -> PathBuf {
        self.manifest.clone().unwrap_or_else(|| self.data.join("manifest.csv"))
    }
}

/// Run configuration; flags override values from `--config`.
#[derive(Args, Clone, Default)]
pub struct RunArgs {
    /// Flat `key = value` configuration file
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// plain or fft
    #[arg(long)]
    pub variant: Option<Variant>,
    /// rSVD target rank k
    #[arg(long)]
    pub target_rank: Option<usize>,
    /// Truncation rank r
    #[arg(long)]
    pub rank: Option<usize>,
    /// knn, tree, gnb or lda
    #[arg(long)]
    pub classifier: Option<ClassifierKind>,
    #[arg(long)]
    pub neighbors: Option<usize>,
    #[arg(long)]
    pub max_depth: Option<usize>,
    #[arg(long)]
    pub min_leaf: Option<usize>,
    /// Undersample to equal class counts before splitting
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub balance: Option<bool>,
    /// Images per class after balancing (default: smallest class)
    #[arg(long)]
    pub per_class: Option<usize>,
    /// Standardize reduced coordinates with training statistics
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub normalize: Option<bool>,
    #[arg(long)]
    pub train_fraction: Option<f64>,
    #[arg(long)]
    pub cycles: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Split each class separately
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub stratified: Option<bool>,
}

impl RunArgs {
    pub fn resolve(&self) -> Result<RunConfig, Failure> {
        let cfg = self.build()?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Merged configuration, not yet validated.
    pub fn build(&self) -> Result<RunConfig, Failure> {
        let mut cfg = RunConfig::default();
        if let Some(path) = &self.config {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Failure::new(error::Category::Ingestion, format!("config {}: {e}", path.display())))?;
            cfg.apply_kv(&text)
                .map_err(|e| Failure::validation(format!("config {}: {e}", path.display())))?;
        }
        macro_rules! over {
            ($($flag:ident => $($field:ident).+),* $(,)?) => {
                $(if let Some(v) = self.$flag { cfg.$($field).+ = v; })*
            };
        }
        over!(
            variant => variant,
            target_rank => target_rank,
            rank => rank,
            classifier => classifier,
            neighbors => params.neighbors,
            max_depth => params.max_depth,
            min_leaf => params.min_leaf,
            balance => balance,
            normalize => normalize,
            train_fraction => train_fraction,
            cycles => cycles,
            seed => seed,
            stratified => stratified,
        );
        if self.per_class.is_some() {
            cfg.per_class = self.per_class;
        }
        Ok(cfg)
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ReportFormat {
    Csv,
    Json,
}

#[derive(Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub run: RunArgs,
    /// Output model file
    #[arg(long, short)]
    pub out: PathBuf,
    /// Metrics report (default: <out>.report.<format>)
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: ReportFormat,
}

#[derive(Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub run: RunArgs,
    /// Ranks as `lo..hi` (inclusive) or a comma list
    #[arg(long, default_value = "1..10")]
    pub ranks: String,
    /// Classifiers to sweep (default: all four)
    #[arg(long, value_delimiter = ',')]
    pub classifiers: Vec<ClassifierKind>,
    #[arg(long, short)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: ReportFormat,
}

#[derive(Args)]
pub struct ModesArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub run: RunArgs,
    /// Output directory for mode_XX.png and spectrum.csv
    #[arg(long, short)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 12)]
    pub count: usize,
}

#[derive(Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Directory with images; every PNG is classified unless a manifest is given
    #[arg(long)]
    pub data: PathBuf,
    /// Manifest selecting (and optionally labeling) the images
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    #[arg(long, short)]
    pub out: PathBuf,
    /// Confusion matrix and metrics against the manifest labels
    #[arg(long)]
    pub confusion: Option<PathBuf>,
}

#[derive(Args)]
pub struct RegimeArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[command(flatten)]
    pub data: DataArgs,
    /// Only rows of this experiment
    #[arg(long)]
    pub experiment: Option<String>,
    #[arg(long)]
    pub csv: Option<PathBuf>,
    #[arg(long)]
    pub svg: Option<PathBuf>,
}

#[derive(Args)]
pub struct SynthArgs {
    #[arg(long, short)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 100)]
    pub per_class: usize,
    #[arg(long, default_value_t = 64)]
    pub side: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Fill the 7 x 20 regime grid with this many images per cell instead
    #[arg(long)]
    pub grid: Option<usize>,
}

fn init_threads() -> Result<(), Failure> {
    let Ok(v) = std::env::var("EIGENPATTERN_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Failure::validation(format!("EIGENPATTERN_THREADS must be a positive integer, got {v:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::new(error::Category::Other, e.to_string()))
}

fn run(cli: Cli) -> Result<(), Failure> {
    init_threads()?;
    match cli.command {
        Command::Ingest(a) => commands::ingest(&a),
        Command::Fit(a) => commands::fit(&a),
        Command::Sweep(a) => commands::sweep(&a),
        Command::Modes(a) => commands::modes(&a),
        Command::Predict(a) => commands::predict(&a),
        Command::RegimeMap(a) => commands::regime_map(&a),
        Command::Synth(a) => commands::synth(&a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.verbose { "info" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {f}");
            f.exit_code()
        }
    }
}
