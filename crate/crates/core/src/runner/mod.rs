//! Config-driven batch commands: prepare, train, evaluate and report.

mod artifact;
mod commands;
mod config;
mod pipeline;

pub use artifact::{FittedModel, ModelArtifact, FORMAT_VERSION};
pub use commands::{
    evaluate, evaluate_dataset, evaluation_files, fit_model, load_evaluation_rows, load_prepared, prepare, report,
    train, DirLock, PrepareOutcome, PIPELINE_FILE, PREPARED_SCHEMA_FILE, RANKING_FILE, TEST_FILE, TRAIN_FILE,
};
pub use config::{Algorithm, FeatureConfig, ModelConfig, RunConfig, SplitConfig, TargetKind};
pub use pipeline::{DesignSpec, Encoding, FeaturePipeline};
