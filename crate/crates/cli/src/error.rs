//! Exit-code classification of library errors.

use std::fmt;
use std::path::Path;
use std::process::ExitCode;

use eigenpattern::classify::{ClassifyError, PersistError};
use eigenpattern::dataset::DatasetError;
use eigenpattern::linalg::LinalgError;
use eigenpattern::metrics::MetricsError;
use eigenpattern::pipeline::PipelineError;
use eigenpattern::regime::RegimeError;
use eigenpattern::synth::SynthError;

/// Process exit status by failure category.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Category {
    /// 1: anything not covered below
    Other = 1,
    /// 2: bad flags, config values or parameter combinations
    Validation = 2,
    /// 3: unreadable, malformed or incomplete input data
    Ingestion = 3,
    /// 4: failures inside factorization, fitting or scoring
    Numerical = 4,
    /// 5: output files that cannot be written
    Io = 5,
}

#[derive(Debug)]
pub struct Failure {
    pub category: Category,
    pub message: String,
}

impl Failure {
    pub fn new(category: Category, message: impl Into<String>) -> Self {
        Failure {
            category,
            message: message.into(),
        }
    }

    pub fn validation(message: impl Into<String>) -> Self {
        Self::new(Category::Validation, message)
    }

    pub fn write(path: &Path, e: impl fmt::Display) -> Self {
        Self::new(Category::Io, format!("cannot write {}: {e}", path.display()))
    }

    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(self.category as u8)
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

fn tagged(category: Category, module: &str, e: impl fmt::Display) -> Failure {
    Failure::new(category, format!("{module}: {e}"))
}

impl From<DatasetError> for Failure {
    fn from(e: DatasetError) -> Self {
        use DatasetError::*;
        let category = match &e {
            Write { .. } => Category::Io,
            TrainFraction(_) | PerClassTooLarge { .. } | MissingClass(_) | EmptySplit { .. } => Category::Validation,
            TooFewSamples(_) | ZeroVariance(_) | FeatureCount { .. } => Category::Numerical,
            _ => Category::Ingestion,
        };
        tagged(category, "dataset", e)
    }
}

impl From<LinalgError> for Failure {
    fn from(e: LinalgError) -> Self {
        tagged(Category::Numerical, "linalg", e)
    }
}

impl From<ClassifyError> for Failure {
    fn from(e: ClassifyError) -> Self {
        match e {
            ClassifyError::Persist(p) => p.into(),
            ClassifyError::ImageSize { .. } => tagged(Category::Ingestion, "classify", e),
            other => tagged(Category::Numerical, "classify", other),
        }
    }
}

impl From<PersistError> for Failure {
    fn from(e: PersistError) -> Self {
        tagged(Category::Ingestion, "model", e)
    }
}

impl From<MetricsError> for Failure {
    fn from(e: MetricsError) -> Self {
        tagged(Category::Numerical, "metrics", e)
    }
}

impl From<RegimeError> for Failure {
    fn from(e: RegimeError) -> Self {
        let category = match e {
            RegimeError::Io { .. } => Category::Io,
            _ => Category::Ingestion,
        };
        tagged(category, "regime-map", e)
    }
}

impl From<SynthError> for Failure {
    fn from(e: SynthError) -> Self {
        tagged(Category::Validation, "synth", e)
    }
}

impl From<PipelineError> for Failure {
    fn from(e: PipelineError) -> Self {
        match e {
            PipelineError::Config(m) => tagged(Category::Validation, "config", m),
            PipelineError::Dataset(e) => e.into(),
            PipelineError::Linalg(e) => e.into(),
            PipelineError::Classify(e) => e.into(),
            PipelineError::Metrics(e) => e.into(),
        }
    }
}
