//! Experiment runner for the spider-walk library.
//!
//! [`run`] executes an [`ExperimentSpec`] on its own thread pool and returns
//! the rows to write; [`emit`] serializes them as CSV or JSON lines. Output
//! depends only on the spec and seed.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod experiments;
mod output;
mod resume;
mod spec;

use std::time::Instant;

use serde::Serialize;

pub use output::{emit, emit_to, parse_json_lines, version_string, ExperimentOutput};
pub use resume::{Progress, Tally, CHECKPOINT_STEPS};
pub use spec::{ExperimentSpec, FnMode, Format, Kind, Params};

/// Environment variable holding the default thread count.
pub const THREADS_ENV: &str = "SPIDERWALK_THREADS";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("{}{message}", trial.map(|t| format!("trial {t}: ")).unwrap_or_default())]
    Runtime { trial: Option<u64>, message: String },
    #[error("io: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime { .. } => 3,
            CliError::Io(_) => 1,
        }
    }
}

/// Timing figures; these vary between runs and are kept out of the output file.
#[derive(Debug, Clone, Serialize)]
pub struct Metrics {
    pub wall_seconds: f64,
    pub steps: u64,
    pub steps_per_second: f64,
    pub threads: usize,
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub output: ExperimentOutput,
    pub metrics: Metrics,
    /// Invariant violations observed during the run; any entry means exit code 3.
    pub violations: Vec<String>,
    /// One-line human summary, possibly empty.
    pub summary: String,
}

/// Thread count from `--threads`, else the environment, else all cores.
pub fn default_threads() -> usize {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.parse().ok())
        .filter(|&n: &usize| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

/// Validates `spec` and runs it.
pub fn run(spec: ExperimentSpec) -> Result<ExperimentResult, CliError> {
    let spec = spec.resolve()?;
    let threads = spec.threads.unwrap_or_else(default_threads);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Runtime {
            trial: None,
            message: e.to_string(),
        })?;
    let start = Instant::now();
    let table = pool.install(|| -> Result<_, CliError> {
        Ok(match spec.kind {
            Kind::ExactCheck => experiments::exact_check(&spec)?,
            Kind::DensityScaling => experiments::density_scaling(&spec)?,
            Kind::HeightDist => experiments::height_dist(&spec)?,
            Kind::Coupling => experiments::coupling(&spec)?,
            Kind::HirschTrace => experiments::hirsch_trace(&spec)?,
            Kind::LegsGrowth => {
                let mut progress = Progress::open(&spec, spec.resume.as_deref())?;
                experiments::legs_growth(&spec, &mut progress)?
            }
            Kind::Coupon => {
                let mut progress = Progress::open(&spec, spec.resume.as_deref())?;
                experiments::coupon(&spec, &mut progress)?
            }
        })
    })?;
    let wall = start.elapsed().as_secs_f64();
    Ok(ExperimentResult {
        metrics: Metrics {
            wall_seconds: wall,
            steps: table.steps,
            steps_per_second: if wall > 0.0 { table.steps as f64 / wall } else { 0.0 },
            threads,
        },
        violations: table.violations,
        summary: table.summary,
        output: ExperimentOutput {
            spec,
            version: version_string(),
            columns: table.columns,
            records: table.records,
        },
    })
}
