//! Experiment configuration, end-to-end runs, report emission and the
//! acceptance checks.

pub mod config;
pub mod report;
pub mod run;
pub mod verify;

pub use config::{ExperimentConfig, ExperimentKind, NormSpace, NormSpec, ObservedCase};
pub use report::{emit_tables, ExperimentReport, OUTPUT_FILES};
pub use run::run_experiment;
pub use verify::{verify, Criterion};
