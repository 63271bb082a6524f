//! Stream data model, ingestion, scaling, and synthetic drift generation.

mod ingest;
mod scaler;
mod synthetic;
mod window;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use ingest::{load_csv_stream, read_csv_stream};
pub use scaler::{apply_scaler, fit_scaler, FeatureScaler, STDDEV_FLOOR};
pub use synthetic::{generate_synthetic_stream, write_stream_csv, Shift, StreamConfig, PRESETS};
pub use window::make_windows;

/// One input/target pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl Sample {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        if x.is_empty() || y.is_empty() {
            return Err(Error::Empty("sample input or target"));
        }
        if !x.iter().chain(&y).all(|v| v.is_finite()) {
            return Err(Error::NonFinite("sample"));
        }
        Ok(Sample { x, y })
    }

    pub fn input_dim(&self) -> usize {
        self.x.len()
    }

    pub fn target_dim(&self) -> usize {
        self.y.len()
    }
}

/// The batch of samples acquired in one period.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodDataset {
    /// Period number, starting at 1.
    pub index: usize,
    samples: Vec<Sample>,
}

impl PeriodDataset {
    pub fn new(index: usize, samples: Vec<Sample>) -> Result<Self> {
        let first = samples.first().ok_or(Error::Empty("period dataset"))?;
        let (k, m) = (first.input_dim(), first.target_dim());
        for s in &samples {
            if s.input_dim() != k {
                return Err(Error::DimensionMismatch {
                    expected: k,
                    found: s.input_dim(),
                });
            }
            if s.target_dim() != m {
                return Err(Error::DimensionMismatch {
                    expected: m,
                    found: s.target_dim(),
                });
            }
        }
        Ok(PeriodDataset { index, samples })
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<Sample> {
        self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    /// Always false for a constructed dataset; present for API symmetry.
    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn input_dim(&self) -> usize {
        self.samples[0].input_dim()
    }

    pub fn target_dim(&self) -> usize {
        self.samples[0].target_dim()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Sample> {
        self.samples.iter()
    }
}

impl<'a> IntoIterator for &'a PeriodDataset {
    type Item = &'a Sample;
    type IntoIter = std::slice::Iter<'a, Sample>;

    fn into_iter(self) -> Self::IntoIter {
        self.samples.iter()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_mixed_dimensions() {
        let a = Sample::new(vec![1.0, 2.0], vec![0.0]).unwrap();
        let b = Sample::new(vec![1.0], vec![0.0]).unwrap();
        assert!(matches!(
            PeriodDataset::new(1, vec![a, b]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn rejects_empty_and_non_finite() {
        assert!(PeriodDataset::new(1, vec![]).is_err());
        assert!(Sample::new(vec![f64::NAN], vec![0.0]).is_err());
        assert!(Sample::new(vec![], vec![0.0]).is_err());
    }
}
