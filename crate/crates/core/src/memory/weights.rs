use serde::{Deserialize, Serialize};

use super::MemorySet;
use crate::data::PeriodDataset;
use crate::error::{Error, Result};

/// Lower bound on a sampling weight.
pub const WEIGHT_FLOOR: f64 = 1e-12;

/// Sampling weights over the memory entries followed by the current samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightSet {
    pub weights: Vec<f64>,
    /// Number of leading weights that belong to memory entries.
    pub memory_len: usize,
}

impl WeightSet {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn memory_weights(&self) -> &[f64] {
        &self.weights[..self.memory_len]
    }

    pub fn current_weights(&self) -> &[f64] {
        &self.weights[self.memory_len..]
    }
}

/// Mixes a density score with the reservoir coefficients:
///
/// * memory entry: `(1 − γ) q(x) + γ A / (A + N)`
/// * current sample: `(1 − γ) q(x) + γ M / (A + N)`
///
/// where `A` is the count of samples seen before this period, `N` the size of
/// the current period and `M` the memory budget.
pub fn sample_weight<Q>(memory: &MemorySet, dataset: &PeriodDataset, q: Q, gamma: f64) -> Result<WeightSet>
where
    Q: Fn(&[f64]) -> f64,
{
    let scores: Vec<f64> = memory
        .entries()
        .iter()
        .map(|e| e.x.as_slice())
        .chain(dataset.iter().map(|s| s.x.as_slice()))
        .map(q)
        .collect();
    weights_from_scores(memory.len(), memory.budget(), memory.seen(), dataset.len(), &scores, gamma)
}

pub(crate) fn weights_from_scores(
    memory_len: usize,
    budget: usize,
    seen: usize,
    current_len: usize,
    scores: &[f64],
    gamma: f64,
) -> Result<WeightSet> {
    if !(0.0..=1.0).contains(&gamma) {
        return Err(Error::invalid(format!("gamma must lie in [0, 1], got {gamma}")));
    }
    if current_len == 0 {
        return Err(Error::Empty("period dataset"));
    }
    debug_assert_eq!(scores.len(), memory_len + current_len);
    if !scores.iter().all(|q| q.is_finite()) {
        return Err(Error::NonFinite("density score"));
    }
    let total = (seen + current_len) as f64;
    let memory_bias = seen as f64 / total;
    let current_bias = budget as f64 / total;
    let weights = scores
        .iter()
        .enumerate()
        .map(|(i, &q)| {
            let bias = if i < memory_len { memory_bias } else { current_bias };
            ((1.0 - gamma) * q + gamma * bias).max(WEIGHT_FLOOR)
        })
        .collect();
    Ok(WeightSet { weights, memory_len })
}
