//! Fixed-budget replay memory and its density-based update.

mod sampling;
mod weights;

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::PeriodDataset;
use crate::density::{density_score, shift_level_score, DensityModel};
use crate::error::{Error, Result};

pub use sampling::{inclusion_probabilities, weighted_sample_without_replacement};
pub use weights::{sample_weight, WeightSet, WEIGHT_FLOOR};

/// A stored sample together with the representation `z = h(x)` computed by
/// the model that was current when the entry was (re)selected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemoryEntry {
    pub x: Vec<f64>,
    pub z: Vec<f64>,
    pub y: Vec<f64>,
}

/// Replay memory with budget `M` and the running count `A` of samples seen in
/// all periods folded into it so far.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemorySet {
    /// Index of the last period folded in; 0 for a fresh memory.
    period: usize,
    budget: usize,
    seen: usize,
    entries: Vec<MemoryEntry>,
}

/// How the balance factor γ is obtained during an update.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightRule {
    /// γ from the two-component mixture over density scores.
    Density,
    /// γ ≡ 1: pure biased coefficients, i.e. batch reservoir sampling.
    Reservoir,
    /// γ pinned to the given value, density scores still computed.
    FixedGamma(f64),
}

/// Result of [`update_memory`] plus the quantities computed along the way.
#[derive(Debug, Clone, PartialEq)]
pub struct MemoryUpdate {
    pub memory: MemorySet,
    pub gamma: f64,
    /// KDE bandwidth, when a density model was fitted.
    pub bandwidth: Option<f64>,
    pub weights: WeightSet,
}

impl MemorySet {
    pub fn new(budget: usize) -> Self {
        MemorySet {
            period: 0,
            budget,
            seen: 0,
            entries: Vec::new(),
        }
    }

    pub fn budget(&self) -> usize {
        self.budget
    }

    /// `A`: samples observed in all periods folded in so far.
    pub fn seen(&self) -> usize {
        self.seen
    }

    pub fn period(&self) -> usize {
        self.period
    }

    pub fn entries(&self) -> &[MemoryEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Builds a memory directly from entries, e.g. for fixtures.
    pub fn from_entries(budget: usize, seen: usize, period: usize, entries: Vec<MemoryEntry>) -> Result<Self> {
        if entries.len() > budget || entries.len() > seen {
            return Err(Error::invalid(format!(
                "{} entries exceed budget {budget} or seen count {seen}",
                entries.len()
            )));
        }
        Ok(MemorySet {
            period,
            budget,
            seen,
            entries,
        })
    }

    #[cfg(test)]
    pub(crate) fn replace_for_test(&mut self, entries: Vec<MemoryEntry>, seen: usize) {
        self.entries = entries;
        self.seen = seen;
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()?).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })
    }
}

/// Folds period `dataset` into `memory`.
///
/// On the first period every sample gets the reservoir weight `M / N`. Later
/// periods fit a KDE on the memory inputs, score every candidate in
/// `memory ∪ dataset`, derive γ per `rule`, and sample `M` candidates by
/// weight. Every selected entry, survivors included, gets `z = repr(x)`.
pub fn update_memory<F>(
    memory: &MemorySet,
    dataset: &PeriodDataset,
    repr: F,
    rule: WeightRule,
    seed: u64,
) -> Result<MemoryUpdate>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    if let Some(e) = memory.entries.first() {
        if e.x.len() != dataset.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: e.x.len(),
                found: dataset.input_dim(),
            });
        }
    }
    let pool_x: Vec<&[f64]> = memory
        .entries
        .iter()
        .map(|e| e.x.as_slice())
        .chain(dataset.iter().map(|s| s.x.as_slice()))
        .collect();

    let (scores, gamma, bandwidth) = if memory.entries.is_empty() {
        (vec![0.5; pool_x.len()], 1.0, None)
    } else {
        match rule {
            WeightRule::Reservoir => (vec![0.5; pool_x.len()], 1.0, None),
            WeightRule::Density | WeightRule::FixedGamma(_) => {
                let kde = DensityModel::fit(memory.entries.iter().map(|e| e.x.clone()).collect())?;
                let scores = pool_x
                    .iter()
                    .map(|x| density_score(kde.density(x)?))
                    .collect::<Result<Vec<f64>>>()?;
                let gamma = match rule {
                    WeightRule::FixedGamma(g) => g,
                    _ => shift_level_score(&scores)?.gamma(),
                };
                (scores, gamma, Some(kde.bandwidth()))
            }
        }
    };

    let weights = weights::weights_from_scores(
        memory.entries.len(),
        memory.budget,
        memory.seen,
        dataset.len(),
        &scores,
        gamma,
    )?;

    let selected = if memory.budget == 0 {
        Vec::new()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        weighted_sample_without_replacement(&weights.weights, memory.budget, &mut rng)?
    };

    let m = memory.entries.len();
    let entries = selected
        .into_iter()
        .map(|i| {
            let (x, y) = if i < m {
                (&memory.entries[i].x, &memory.entries[i].y)
            } else {
                let s = &dataset.samples()[i - m];
                (&s.x, &s.y)
            };
            MemoryEntry {
                x: x.clone(),
                z: repr(x),
                y: y.clone(),
            }
        })
        .collect();

    Ok(MemoryUpdate {
        memory: MemorySet {
            period: dataset.index,
            budget: memory.budget,
            seen: memory.seen + dataset.len(),
            entries,
        },
        gamma,
        bandwidth,
        weights,
    })
}
