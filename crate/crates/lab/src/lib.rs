//! Experiment harness around `etl-core`: TOML-configured multi-seed runs,
//! deterministic CSV output with config sidecars, and post-hoc summaries.

pub mod config;
pub mod error;
pub mod runner;
pub mod summarize;

pub use config::Settings;
pub use error::LabError;
pub use runner::{run_experiment, Report, ReportData};
pub use summarize::{render, summarize_file, Summary};
