//! Config-driven experiments with deterministic JSON reports and CSV tables.

mod config;
mod output;
mod runners;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use config::{
    AlphaKind, AlphaSpec, DistributionKind, DistributionSpec, EnergySpec, ExperimentConfig, ExperimentKind, GaugeSpec,
    GaugeSpecKind, IntervalSpec, OutputSpec, Params, Plan, Sizes,
};
pub use output::{emit_report, read_report, OutputFiles, RunOptions, SCHEMA};

use crate::error::{Error, Result};
use crate::table::Table;

/// One pass/fail verdict with the tolerance it was judged against.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub relation: String,
    pub tolerance: f64,
    pub pass: bool,
}

impl Check {
    pub fn at_most(name: &str, value: f64, tolerance: f64) -> Self {
        Self {
            name: name.to_string(),
            value,
            relation: "<=".into(),
            tolerance,
            pass: value <= tolerance,
        }
    }

    pub fn at_least(name: &str, value: f64, tolerance: f64) -> Self {
        Self {
            name: name.to_string(),
            value,
            relation: ">=".into(),
            tolerance,
            pass: value >= tolerance,
        }
    }

    pub fn flag(name: &str, ok: bool) -> Self {
        Self::at_least(name, if ok { 1.0 } else { 0.0 }, 1.0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TableInfo {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub experiment: ExperimentKind,
    pub version: String,
    /// Hex SHA-256 of `"config <len>\0"` followed by the canonical JSON config.
    pub input_hash: String,
    pub config: ExperimentConfig,
    pub all_pass: bool,
    pub checks: Vec<Check>,
    pub tables: Vec<TableInfo>,
    pub results: serde_json::Value,
}

/// A finished run with its CSV tables, wall time in seconds and pool size.
#[derive(Clone, Debug)]
pub struct RunOutput {
    pub report: ExperimentReport,
    pub tables: Vec<Table>,
    pub wall_time: f64,
    pub workers: usize,
}

pub fn input_hash(config: &ExperimentConfig) -> String {
    let canonical = serde_json::to_string(config).expect("config serializes to JSON");
    let mut h = Sha256::new();
    h.update(format!("config {}\0", canonical.len()).as_bytes());
    h.update(canonical.as_bytes());
    hex::encode(h.finalize())
}

/// Validates the config and runs it on `workers` threads (all available when
/// `None`). The report does not depend on the worker count.
pub fn run_experiment(config: &ExperimentConfig, workers: Option<usize>) -> Result<RunOutput> {
    let plan = config.plan()?;
    let start = std::time::Instant::now();
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(w) = workers.or(config.workers) {
        builder = builder.num_threads(w);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::invalid(format!("cannot start worker pool: {e}")))?;
    let outcome = pool.install(|| runners::run(&plan))?;
    let report = ExperimentReport {
        experiment: config.experiment,
        version: env!("CARGO_PKG_VERSION").to_string(),
        input_hash: input_hash(config),
        config: config.clone(),
        all_pass: outcome.checks.iter().all(|c| c.pass),
        checks: outcome.checks,
        tables: outcome
            .tables
            .iter()
            .map(|t| TableInfo {
                name: t.name.clone(),
                columns: t.columns.clone(),
                rows: t.len(),
            })
            .collect(),
        results: outcome.results,
    };
    Ok(RunOutput {
        report,
        tables: outcome.tables,
        wall_time: start.elapsed().as_secs_f64(),
        workers: pool.current_num_threads(),
    })
}
