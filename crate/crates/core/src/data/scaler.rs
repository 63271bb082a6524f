use serde::{Deserialize, Serialize};

use super::{PeriodDataset, Sample};
use crate::error::{Error, Result};

/// Lower bound on a fitted standard deviation; constant columns scale to 0.
pub const STDDEV_FLOOR: f64 = 1e-8;

/// Per-column standardization `(v - mean) / stddev` using the population
/// standard deviation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureScaler {
    pub means: Vec<f64>,
    pub stddevs: Vec<f64>,
}

impl FeatureScaler {
    pub fn fit<'a, I>(rows: I) -> Result<Self>
    where
        I: IntoIterator<Item = &'a [f64]>,
    {
        let rows: Vec<&[f64]> = rows.into_iter().collect();
        let first = rows.first().ok_or(Error::Empty("scaler input"))?;
        let dim = first.len();
        let n = rows.len() as f64;

        let mut means = vec![0.0; dim];
        for row in &rows {
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: row.len(),
                });
            }
            for (m, v) in means.iter_mut().zip(row.iter()) {
                *m += v;
            }
        }
        means.iter_mut().for_each(|m| *m /= n);

        let mut vars = vec![0.0; dim];
        for row in &rows {
            for ((s, v), m) in vars.iter_mut().zip(row.iter()).zip(&means) {
                *s += (v - m) * (v - m);
            }
        }
        let stddevs = vars
            .into_iter()
            .map(|s| (s / n).sqrt().max(STDDEV_FLOOR))
            .collect();
        Ok(FeatureScaler { means, stddevs })
    }

    pub fn dim(&self) -> usize {
        self.means.len()
    }

    pub fn transform(&self, v: &[f64]) -> Vec<f64> {
        v.iter()
            .zip(&self.means)
            .zip(&self.stddevs)
            .map(|((v, m), s)| (v - m) / s)
            .collect()
    }

    pub fn inverse(&self, v: &[f64]) -> Vec<f64> {
        v.iter()
            .zip(&self.means)
            .zip(&self.stddevs)
            .map(|((v, m), s)| v * s + m)
            .collect()
    }

    /// Fits on the targets `y` instead of the inputs.
    pub fn fit_targets(datasets: &[PeriodDataset]) -> Result<Self> {
        Self::fit(datasets.iter().flat_map(|d| d.iter().map(|s| s.y.as_slice())))
    }

    pub fn apply_targets(&self, dataset: &PeriodDataset) -> Result<PeriodDataset> {
        self.check_dim(dataset.target_dim())?;
        map_samples(dataset, |s| Sample {
            x: s.x.clone(),
            y: self.transform(&s.y),
        })
    }

    fn check_dim(&self, found: usize) -> Result<()> {
        if found != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found,
            });
        }
        Ok(())
    }
}

/// Fits a scaler over the inputs of all given datasets. Callers fit once on the
/// first period and reuse the result for the rest of the stream.
pub fn fit_scaler(datasets: &[PeriodDataset]) -> Result<FeatureScaler> {
    FeatureScaler::fit(datasets.iter().flat_map(|d| d.iter().map(|s| s.x.as_slice())))
}

pub fn apply_scaler(scaler: &FeatureScaler, dataset: &PeriodDataset) -> Result<PeriodDataset> {
    scaler.check_dim(dataset.input_dim())?;
    map_samples(dataset, |s| Sample {
        x: scaler.transform(&s.x),
        y: s.y.clone(),
    })
}

fn map_samples(dataset: &PeriodDataset, f: impl Fn(&Sample) -> Sample) -> Result<PeriodDataset> {
    PeriodDataset::new(dataset.index, dataset.iter().map(f).collect())
}
