use std::path::{Path, PathBuf};

use dmshm::data::{generate_synthetic_stream, load_csv_stream, StreamConfig, PRESETS};
use dmshm::{LossWeights, MethodKind, Optimizer, PeriodDataset, TrainConfig};
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Where the stream comes from. Exactly one variant per config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum DataSource {
    Csv(CsvSource),
    /// A named synthetic preset, regenerated with each run's seed.
    Preset(String),
    /// A fully specified synthetic stream with its own seed.
    Stream(StreamConfig),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CsvSource {
    pub path: PathBuf,
    pub period_length: usize,
    pub target_columns: Vec<String>,
}

impl DataSource {
    pub fn load(&self, seed: u64) -> Result<Vec<PeriodDataset>, CliError> {
        match self {
            DataSource::Csv(c) => Ok(load_csv_stream(&c.path, c.period_length, &c.target_columns)?),
            DataSource::Preset(name) => {
                let cfg = StreamConfig::preset(name, seed).ok_or_else(|| unknown_preset(name))?;
                Ok(generate_synthetic_stream(&cfg)?)
            }
            DataSource::Stream(cfg) => Ok(generate_synthetic_stream(cfg)?),
        }
    }
}

pub fn unknown_preset(name: &str) -> CliError {
    CliError::Config(format!("unknown preset `{name}`; available presets: {}", PRESETS.join(", ")))
}

/// Optimizer settings; the seed and loss weights are supplied per run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainSection {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub optimizer: Optimizer,
    pub hidden_dim: usize,
}

impl Default for TrainSection {
    fn default() -> Self {
        let d = TrainConfig::default();
        TrainSection {
            learning_rate: d.learning_rate,
            epochs: d.epochs,
            batch_size: d.batch_size,
            optimizer: d.optimizer,
            hidden_dim: d.hidden_dim,
        }
    }
}

fn default_methods() -> Vec<MethodKind> {
    vec![MethodKind::Dmshm]
}

fn default_budget() -> usize {
    50
}

fn default_future_fraction() -> f64 {
    0.1
}

fn default_seeds() -> Vec<u64> {
    vec![1]
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("runs")
}

/// Top-level experiment file. Every field except `data` has a default and
/// unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub data: DataSource,
    #[serde(default = "default_methods")]
    pub methods: Vec<MethodKind>,
    #[serde(default = "default_budget")]
    pub memory_budget: usize,
    #[serde(default)]
    pub loss_weights: LossWeights,
    #[serde(default)]
    pub train: TrainSection,
    #[serde(default = "default_future_fraction")]
    pub future_fraction: f64,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
    /// Also write `projection.csv` for each run.
    #[serde(default)]
    pub projection: bool,
}

/// Command-line values that replace the corresponding config entries.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub method: Option<MethodKind>,
    pub out: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(seed) = o.seed {
            self.seeds = vec![seed];
        }
        if let Some(method) = o.method {
            self.methods = vec![method];
        }
        if let Some(out) = &o.out {
            self.out_dir.clone_from(out);
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |msg: String| Err(CliError::Config(msg));
        if self.methods.is_empty() {
            return bad("`methods` must name at least one method".into());
        }
        if self.seeds.is_empty() {
            return bad("`seeds` must list at least one seed".into());
        }
        if !(self.future_fraction > 0.0 && self.future_fraction <= 1.0) {
            return bad(format!("`future_fraction` must lie in (0, 1], got {}", self.future_fraction));
        }
        if let Err(e) = self.loss_weights.validate() {
            return bad(format!("`loss_weights`: {e}"));
        }
        if let Err(e) = self.train_config(0).validate() {
            return bad(format!("`train`: {e}"));
        }
        match &self.data {
            DataSource::Preset(name) if StreamConfig::preset(name, 0).is_none() => Err(unknown_preset(name)),
            DataSource::Stream(cfg) => cfg.validate().map_err(|e| CliError::Config(format!("`data.stream`: {e}"))),
            DataSource::Csv(c) if c.period_length == 0 => bad("`data.csv.period_length` must be at least 1".into()),
            DataSource::Csv(c) if c.target_columns.is_empty() => {
                bad("`data.csv.target_columns` must name at least one column".into())
            }
            _ => Ok(()),
        }
    }

    pub fn train_config(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            learning_rate: self.train.learning_rate,
            epochs: self.train.epochs,
            batch_size: self.train.batch_size,
            optimizer: self.train.optimizer,
            loss_weights: self.loss_weights,
            hidden_dim: self.train.hidden_dim,
            seed,
        }
    }
}

/// The fully resolved settings of one (method, seed) run, written next to its
/// outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub data: DataSource,
    pub method: MethodKind,
    pub seed: u64,
    pub memory_budget: usize,
    pub loss_weights: LossWeights,
    pub train: TrainSection,
    pub future_fraction: f64,
}
