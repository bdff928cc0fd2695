//! Experiment front end: flat key-value configs, the solve / evaluate /
//! optimize / reproduce workflows, and kind-tagged JSONL records.

pub mod config;
pub mod records;
pub mod reproduce;
pub mod run;

pub use config::{ExperimentConfig, OutputFormat, StartSpec};
pub use records::{
    ComparisonRecord, EquilibriumRecord, ObjectiveRecord, Record, SolveRecord, SummaryRecord,
    TraceRecord,
};
pub use reproduce::{run_experiments, ExperimentOutcome};
pub use run::{run_evaluate, run_optimize, run_reproduce, run_solve, CliError, Writer};
