//! Experiment harness for streaming graph GP ensembles: configuration,
//! CSV ingestion, the replicate pipeline, method comparisons, output
//! rendering and posterior checkpoints.

pub mod checkpoint;
pub mod config;
pub mod data_io;
pub mod error;
pub mod output;
pub mod pipeline;
pub mod runner;

pub use config::ExperimentConfig;
pub use error::{HarnessError, Result};
pub use pipeline::{prepare, run_single, run_trace, ReplicateRecord, TraceRow};
pub use runner::{compare_methods, run_replicates, Method, RunSummary, ALL_METHODS};
