//! Command-line front end: data ingestion, experiment runs and CSV output.

pub mod cli;
pub mod config;
pub mod data;
pub mod experiment;
pub mod output;

pub use cli::cli_main;
pub use config::{Entry, ExperimentConfig, ObjectiveKind, ParamsSpec, USpec};
pub use data::{load_banknote_csv, DataSource};
pub use experiment::{run_experiment, EntryReport, EntryResult, ExperimentReport};
pub use output::emit_csv;
