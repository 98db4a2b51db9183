//! Batch front-end: TOML run configurations in, CSV or JSON tables out.

pub mod config;
pub mod output;
pub mod plan;
pub mod run;

pub use config::{parse_config, ConfigError, RunConfig};
pub use run::{run_experiment, RunError};
