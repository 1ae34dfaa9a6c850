//! Experiment harness: config parsing, end-to-end runs, reports and maps.

pub mod config;
pub mod error;
pub mod experiment;
pub mod map;
pub mod report;

pub use config::{read_config_file, DatasetKind, ExperimentConfig, OracleKind};
pub use error::{ExperimentError, EXIT_CONFIG, EXIT_DATA, EXIT_NUMERIC};
pub use experiment::{run_experiment, write_artifacts, ExperimentRun};
pub use map::render_map;
pub use report::ExperimentReport;
