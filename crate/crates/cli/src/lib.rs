//! Config-driven experiment runner for `zenoflux`.

pub mod config;
pub mod error;
pub mod experiment;
pub mod output;
pub mod runner;
pub mod selftest;
pub mod setup;

pub use config::{parse_config, parse_config_at, ExperimentConfig, RunKind};
pub use error::{CliError, Result};
pub use experiment::{Experiment, ExperimentRegistry, Report, RunContext};
pub use runner::{run_experiment, run_with, RunManifest, RunOptions};
pub use selftest::{run_self_test, SelfTestReport};

use std::fs;
use std::path::Path;

/// Reads, parses and validates a config file.
pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let base = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    parse_config_at(&text, base)
}
