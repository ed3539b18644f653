//! Runs one configured experiment and writes its outputs and manifest.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::Instant;

use serde_json::{json, Value};
use zenoflux::PropagatorRegistry;

use crate::config::ExperimentConfig;
use crate::error::{CliError, Result};
use crate::experiment::{ExperimentRegistry, RunContext};
use crate::output::{float, to_json_text, OutputDir, WrittenFile};

pub const MANIFEST_NAME: &str = "manifest.json";

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Replaces `output.directory`.
    pub out: Option<PathBuf>,
    /// Replaces `run.seed`.
    pub seed: Option<u64>,
}

#[derive(Debug, Clone)]
pub struct RunManifest {
    pub config: BTreeMap<String, BTreeMap<String, String>>,
    pub version: &'static str,
    pub diagnostics: BTreeMap<String, Value>,
    pub wall_clock_seconds: f64,
    pub files: Vec<WrittenFile>,
    pub directory: PathBuf,
    pub breakdown: Option<String>,
}

impl RunManifest {
    pub fn to_json(&self) -> Value {
        json!({
            "config": self.config,
            "version": self.version,
            "diagnostics": self.diagnostics,
            "wall_clock_seconds": float(self.wall_clock_seconds),
            "breakdown": self.breakdown,
            "files": self.files.iter().map(|f| json!({
                "name": f.name,
                "sha256": f.sha256,
                "bytes": f.bytes,
            })).collect::<Vec<_>>(),
        })
    }
}

pub fn run_experiment(config: &ExperimentConfig, options: &RunOptions) -> Result<RunManifest> {
    run_with(
        config,
        options,
        &ExperimentRegistry::with_builtins(),
        &PropagatorRegistry::with_builtins(),
    )
}

pub fn run_with(
    config: &ExperimentConfig,
    options: &RunOptions,
    experiments: &ExperimentRegistry,
    propagators: &PropagatorRegistry,
) -> Result<RunManifest> {
    let mut config = config.clone();
    if let Some(seed) = options.seed {
        config.run.seed = seed;
    }
    if let Some(out) = &options.out {
        config.output.directory = out.clone();
    }
    let experiment = experiments
        .get(config.run.kind)
        .ok_or_else(|| CliError::validation("run.kind", format!("no experiment registered for {}", config.run.kind)))?;

    // fail on an unusable output directory before spending time on numerics
    let mut out = OutputDir::create(&config.output.directory)?;
    let start = Instant::now();
    let report = experiment.run(&RunContext {
        config: &config,
        propagators,
    })?;
    let elapsed = start.elapsed().as_secs_f64();

    for (stem, table) in &report.tables {
        if config.output.csv {
            out.write(&format!("{stem}.csv"), &table.to_csv())?;
        }
        if config.output.json {
            out.write(&format!("{stem}.json"), &to_json_text(&table.to_json()))?;
        }
    }
    for (stem, doc) in &report.documents {
        out.write(&format!("{stem}.json"), &to_json_text(doc))?;
    }

    let manifest = RunManifest {
        config: config.echo(),
        version: env!("CARGO_PKG_VERSION"),
        diagnostics: report.diagnostics,
        wall_clock_seconds: elapsed,
        files: out.written().to_vec(),
        directory: out.root().to_path_buf(),
        breakdown: report.breakdown,
    };
    out.write_untracked(MANIFEST_NAME, &to_json_text(&manifest.to_json()))?;
    Ok(manifest)
}
