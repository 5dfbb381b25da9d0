pub mod class;
pub mod classify;
pub mod dataset;
pub mod linalg;
pub mod metrics;
pub mod pipeline;
pub mod regime;
pub mod synth;

pub use class::PatternClass;
