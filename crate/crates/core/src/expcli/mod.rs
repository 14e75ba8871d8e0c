//! Experiment harness behind the `hebbian-es` binary.

mod commands;
mod config;
mod manifest;

pub use commands::{
    cmd_analyze, cmd_evaluate, cmd_perturb, cmd_resume, cmd_train, load_genome, AnalysisKind, EvalReport, EvalRow, PerturbOutput,
    PerturbRequest, SweepReport, TrainOptions, TrainOutcome, SWEEP_TOLERANCE,
};
pub use config::{ExperimentConfig, RunConfig, OUTPUT_ENV, PRESETS};
pub use manifest::{list_files, sha256_file, FileEntry, FinalMetrics, RunManifest, MANIFEST_FILE};
