//! Experiment runner behind the `dmshm` binary.

pub mod config;

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use dmshm::data::{generate_synthetic_stream, write_stream_csv, StreamConfig};
use dmshm::harness::{
    project_stream, run_experiment, summarize, write_metrics_json, write_periods_csv, write_projection_csv,
    write_summary_csv,
};
use dmshm::{Error, MethodKind, MethodSpec, MetricsReport};
use log::info;
use rayon::prelude::*;

pub use config::{DataSource, ExperimentConfig, Overrides, RunConfig, TrainSection};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(Error),
    #[error("training diverged: {0}")]
    Divergence(Error),
    #[error("{0}")]
    Other(Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Data(_) => 3,
            CliError::Divergence(_) => 4,
            CliError::Other(_) => 1,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Divergence { .. } => CliError::Divergence(e),
            e if e.is_data_error() => CliError::Data(e),
            Error::InvalidArgument(_) | Error::NonFinite(_) => CliError::Data(e),
            e => CliError::Other(e),
        }
    }
}

fn io_error(path: &Path, source: std::io::Error) -> CliError {
    CliError::Other(Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn run_dir(out: &Path, method: MethodKind, seed: u64) -> PathBuf {
    out.join(method.name()).join(format!("seed-{seed}"))
}

fn run_one(config: &ExperimentConfig, method: MethodKind, seed: u64) -> Result<MetricsReport, CliError> {
    let stream = config.data.load(seed)?;
    let spec = MethodSpec::new(method);
    let train = config.train_config(seed);
    let report = run_experiment(&stream, &spec, &train, config.memory_budget, config.future_fraction, seed)?;

    let dir = run_dir(&config.out_dir, method, seed);
    fs::create_dir_all(&dir).map_err(|e| io_error(&dir, e))?;
    let resolved = RunConfig {
        data: config.data.clone(),
        method,
        seed,
        memory_budget: config.memory_budget,
        loss_weights: config.loss_weights,
        train: config.train.clone(),
        future_fraction: config.future_fraction,
    };
    let path = dir.join("config.json");
    let text = serde_json::to_string_pretty(&resolved).map_err(|e| CliError::Other(e.into()))?;
    fs::write(&path, text + "\n").map_err(|e| io_error(&path, e))?;
    write_metrics_json(&report, dir.join("metrics.json")).map_err(CliError::Other)?;
    write_periods_csv(&report, dir.join("periods.csv")).map_err(CliError::Other)?;
    if config.projection {
        write_projection_csv(&project_stream(&stream)?, dir.join("projection.csv")).map_err(CliError::Other)?;
    }
    info!("{method} seed {seed}: FE {:.5} PE {:.5}", report.fe, report.pe);
    Ok(report)
}

/// Runs every (method, seed) pair of `config`, writing one directory per run
/// and `summary.csv` under the output directory. Reports come back ordered by
/// method, then seed, regardless of `jobs`.
pub fn cmd_run(config: &ExperimentConfig, jobs: usize) -> Result<Vec<MetricsReport>, CliError> {
    config.validate()?;
    fs::create_dir_all(&config.out_dir).map_err(|e| io_error(&config.out_dir, e))?;
    let runs: Vec<(MethodKind, u64)> = config
        .methods
        .iter()
        .flat_map(|&m| config.seeds.iter().map(move |&s| (m, s)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| CliError::Config(format!("cannot start {jobs} jobs: {e}")))?;
    let reports = pool.install(|| {
        runs.par_iter()
            .map(|&(m, s)| run_one(config, m, s))
            .collect::<Result<Vec<_>, _>>()
    })?;
    let path = config.out_dir.join("summary.csv");
    write_summary_csv(&summarize(&reports), &path).map_err(CliError::Other)?;
    Ok(reports)
}

/// Writes a preset stream as CSV. The output depends only on the preset name
/// and seed.
pub fn cmd_simulate(preset: &str, seed: u64, out: &Path) -> Result<StreamConfig, CliError> {
    let cfg = StreamConfig::preset(preset, seed).ok_or_else(|| config::unknown_preset(preset))?;
    let stream = generate_synthetic_stream(&cfg)?;
    let file = fs::File::create(out).map_err(|e| io_error(out, e))?;
    let mut w = BufWriter::new(file);
    write_stream_csv(&stream, &mut w).map_err(CliError::Other)?;
    w.flush().map_err(|e| io_error(out, e))?;
    Ok(cfg)
}
