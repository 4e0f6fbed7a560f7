//! Command-line front end: experiment configs in, trace and report files
//! out.

pub mod commands;
pub mod config;
pub mod io;
pub mod registry;

pub use commands::{
    cmd_diagnose, cmd_reach, cmd_run, diagnose_trace, format_reach, run_config, run_experiment, run_presets,
    DiagnosticsReport, Outcome, RunSummary,
};
pub use config::{Algorithm, DiagnoseOptions, ExperimentConfig, Sequence};
pub use registry::{preset, PRESETS};
