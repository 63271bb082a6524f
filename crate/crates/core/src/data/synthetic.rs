use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{PeriodDataset, Sample};
use crate::error::{Error, Result};

/// Names accepted by [`StreamConfig::preset`].
pub const PRESETS: &[&str] = &["drift8"];

/// A distribution change taking effect at `period` and persisting until the
/// next scheduled shift.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Shift {
    pub period: usize,
    /// Mean of the input distribution from this period on (baseline is 0).
    pub mean_offset: Vec<f64>,
    /// Per-feature standard deviation from this period on (baseline is 1).
    pub scale: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StreamConfig {
    pub periods: usize,
    pub samples_per_period: usize,
    pub input_dim: usize,
    pub target_dim: usize,
    #[serde(default)]
    pub shifts: Vec<Shift>,
    pub noise_std: f64,
    pub seed: u64,
}

impl StreamConfig {
    /// `drift8`: eight periods of 200 samples in four features with a single
    /// configuration change at period 6 that moves the inputs and redraws
    /// the input/target relation.
    pub fn preset(name: &str, seed: u64) -> Option<StreamConfig> {
        match name {
            "drift8" => Some(StreamConfig {
                periods: 8,
                samples_per_period: 200,
                input_dim: 4,
                target_dim: 1,
                shifts: vec![Shift {
                    period: 6,
                    mean_offset: vec![3.0, 3.0, 0.0, 0.0],
                    scale: 1.0,
                }],
                noise_std: 0.1,
                seed,
            }),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.periods == 0 || self.samples_per_period == 0 {
            return Err(Error::invalid("periods and samples_per_period must be at least 1"));
        }
        if self.input_dim == 0 || self.target_dim == 0 {
            return Err(Error::invalid("input_dim and target_dim must be at least 1"));
        }
        if !(self.noise_std.is_finite() && self.noise_std >= 0.0) {
            return Err(Error::invalid("noise_std must be finite and non-negative"));
        }
        for s in &self.shifts {
            if s.period == 0 || s.period > self.periods {
                return Err(Error::invalid(format!(
                    "shift period {} outside 1..={}",
                    s.period, self.periods
                )));
            }
            if s.mean_offset.len() != self.input_dim {
                return Err(Error::DimensionMismatch {
                    expected: self.input_dim,
                    found: s.mean_offset.len(),
                });
            }
            if !(s.scale.is_finite() && s.scale > 0.0) {
                return Err(Error::invalid("shift scale must be positive"));
            }
        }
        Ok(())
    }
}

struct LinearMap {
    weights: Vec<Vec<f64>>,
    bias: Vec<f64>,
}

impl LinearMap {
    fn draw(rng: &mut ChaCha8Rng, k: usize, m: usize) -> Self {
        let norm = 1.0 / (k as f64).sqrt();
        let weights = (0..m)
            .map(|_| (0..k).map(|_| norm * rng.sample::<f64, _>(StandardNormal)).collect())
            .collect();
        let bias = (0..m).map(|_| rng.sample(StandardNormal)).collect();
        LinearMap { weights, bias }
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.weights
            .iter()
            .zip(&self.bias)
            .map(|(row, c)| row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + c)
            .collect()
    }
}

/// Generates a piecewise-stationary stream. Inputs are Gaussian with the mean
/// and scale of the most recent shift; targets are `W x + c` plus Gaussian
/// noise, with `(W, c)` drawn at the start and redrawn at every shift.
pub fn generate_synthetic_stream(config: &StreamConfig) -> Result<Vec<PeriodDataset>> {
    config.validate()?;
    let (k, m) = (config.input_dim, config.target_dim);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut map = LinearMap::draw(&mut rng, k, m);
    let mut mean = vec![0.0; k];
    let mut scale = 1.0;

    let mut stream = Vec::with_capacity(config.periods);
    for period in 1..=config.periods {
        if let Some(shift) = config.shifts.iter().rev().find(|s| s.period == period) {
            mean.clone_from(&shift.mean_offset);
            scale = shift.scale;
            map = LinearMap::draw(&mut rng, k, m);
        }
        let mut samples = Vec::with_capacity(config.samples_per_period);
        for _ in 0..config.samples_per_period {
            let x: Vec<f64> = mean
                .iter()
                .map(|mu| mu + scale * rng.sample::<f64, _>(StandardNormal))
                .collect();
            let mut y = map.apply(&x);
            if config.noise_std > 0.0 {
                for v in &mut y {
                    *v += config.noise_std * rng.sample::<f64, _>(StandardNormal);
                }
            }
            samples.push(Sample::new(x, y)?);
        }
        stream.push(PeriodDataset::new(period, samples)?);
    }
    Ok(stream)
}

/// Writes a stream as CSV with a `timestamp` column (the global row index),
/// features `x0..` and targets `y0..`.
pub fn write_stream_csv<W: Write>(stream: &[PeriodDataset], writer: W) -> Result<()> {
    let first = stream.first().ok_or(Error::Empty("stream"))?;
    let (k, m) = (first.input_dim(), first.target_dim());
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["timestamp".to_string()];
    header.extend((0..k).map(|j| format!("x{j}")));
    header.extend((0..m).map(|j| format!("y{j}")));
    w.write_record(&header)?;
    for (row, s) in stream.iter().flat_map(PeriodDataset::iter).enumerate() {
        let mut rec = Vec::with_capacity(1 + k + m);
        rec.push(row.to_string());
        rec.extend(s.x.iter().chain(&s.y).map(f64::to_string));
        w.write_record(&rec)?;
    }
    w.flush().map_err(|source| Error::Io {
        path: "<csv writer>".into(),
        source,
    })?;
    Ok(())
}
