use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{LossWeights, Objective, RegressorParams};
use crate::data::{PeriodDataset, Sample};
use crate::error::{Error, Result};
use crate::memory::MemorySet;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Optimizer {
    /// Plain gradient descent.
    Sgd,
    /// Adam with β₁ = 0.9, β₂ = 0.999, ε = 1e-8.
    Adam,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub optimizer: Optimizer,
    pub loss_weights: LossWeights,
    /// Representation width `r` used when no previous model exists.
    pub hidden_dim: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 1e-3,
            epochs: 100,
            batch_size: 64,
            optimizer: Optimizer::Adam,
            loss_weights: LossWeights::default(),
            hidden_dim: 32,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate.is_finite() && self.learning_rate >= 0.0) {
            return Err(Error::invalid("learning_rate must be finite and non-negative"));
        }
        if self.epochs == 0 || self.batch_size == 0 || self.hidden_dim == 0 {
            return Err(Error::invalid("epochs, batch_size and hidden_dim must be at least 1"));
        }
        self.loss_weights.validate()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub params: RegressorParams,
    /// Mean minibatch total loss of each epoch.
    pub loss_trace: Vec<f64>,
}

impl TrainOutcome {
    pub fn final_loss(&self) -> f64 {
        self.loss_trace.last().copied().unwrap_or(f64::NAN)
    }
}

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const EPSILON: f64 = 1e-8;

enum Stepper {
    Sgd,
    Adam { m: Vec<f64>, v: Vec<f64>, t: i32 },
}

impl Stepper {
    fn new(kind: Optimizer, len: usize) -> Self {
        match kind {
            Optimizer::Sgd => Stepper::Sgd,
            Optimizer::Adam => Stepper::Adam {
                m: vec![0.0; len],
                v: vec![0.0; len],
                t: 0,
            },
        }
    }

    fn step(&mut self, params: &mut [f64], grad: &[f64], lr: f64) {
        match self {
            Stepper::Sgd => {
                for (p, g) in params.iter_mut().zip(grad) {
                    *p -= lr * g;
                }
            }
            Stepper::Adam { m, v, t } => {
                *t += 1;
                let c1 = 1.0 - BETA1.powi(*t);
                let c2 = 1.0 - BETA2.powi(*t);
                for i in 0..params.len() {
                    m[i] = BETA1 * m[i] + (1.0 - BETA1) * grad[i];
                    v[i] = BETA2 * v[i] + (1.0 - BETA2) * grad[i] * grad[i];
                    params[i] -= lr * (m[i] / c1) / ((v[i] / c2).sqrt() + EPSILON);
                }
            }
        }
    }
}

/// Trains for one period with the previous model frozen as the hint teacher.
///
/// Starts from `prev` when given, otherwise from a seeded fan-in
/// initialization. Each step uses one shuffled minibatch of `dataset` and the
/// whole memory.
pub fn train_period(
    prev: Option<&RegressorParams>,
    memory: &MemorySet,
    dataset: &PeriodDataset,
    config: &TrainConfig,
) -> Result<TrainOutcome> {
    train_period_weighted(prev, memory, dataset, None, config)
}

/// [`train_period`] with per-sample weights on the current-batch term.
pub fn train_period_weighted(
    prev: Option<&RegressorParams>,
    memory: &MemorySet,
    dataset: &PeriodDataset,
    sample_weights: Option<&[f64]>,
    config: &TrainConfig,
) -> Result<TrainOutcome> {
    config.validate()?;
    if let Some(w) = sample_weights {
        if w.len() != dataset.len() {
            return Err(Error::DimensionMismatch {
                expected: dataset.len(),
                found: w.len(),
            });
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut params = match prev {
        Some(p) => {
            if p.input_dim() != dataset.input_dim() || p.output_dim() != dataset.target_dim() {
                return Err(Error::DimensionMismatch {
                    expected: p.input_dim(),
                    found: dataset.input_dim(),
                });
            }
            p.clone()
        }
        None => RegressorParams::init(dataset.input_dim(), config.hidden_dim, dataset.target_dim(), &mut rng),
    };
    let hints: Option<Vec<Vec<f64>>> =
        prev.map(|p| dataset.iter().map(|s| p.represent_unchecked(&s.x)).collect());

    let mut stepper = Stepper::new(config.optimizer, params.len());
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    let mut trace = Vec::with_capacity(config.epochs);
    let mut batch: Vec<Sample> = Vec::with_capacity(config.batch_size);
    let mut batch_hints: Vec<Vec<f64>> = Vec::with_capacity(config.batch_size);
    let mut batch_weights: Vec<f64> = Vec::with_capacity(config.batch_size);

    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        let mut steps = 0usize;
        for chunk in order.chunks(config.batch_size) {
            batch.clear();
            batch_hints.clear();
            batch_weights.clear();
            for &i in chunk {
                batch.push(dataset.samples()[i].clone());
                if let Some(h) = &hints {
                    batch_hints.push(h[i].clone());
                }
                if let Some(w) = sample_weights {
                    batch_weights.push(w[i]);
                }
            }
            if sample_weights.is_some() && batch_weights.iter().sum::<f64>() <= 0.0 {
                continue;
            }
            let objective = Objective {
                batch: &batch,
                hints: hints.as_ref().map(|_| batch_hints.as_slice()),
                memory: memory.entries(),
                sample_weights: sample_weights.map(|_| batch_weights.as_slice()),
                weights: config.loss_weights,
            };
            let (terms, grad) = objective
                .terms_and_gradient(&params)
                .map_err(|e| match e {
                    Error::NonFinite(_) => Error::Divergence { epoch, period: None },
                    other => other,
                })?;
            stepper.step(params.as_mut_slice(), grad.as_slice(), config.learning_rate);
            epoch_loss += terms.total;
            steps += 1;
        }
        let mean = epoch_loss / steps.max(1) as f64;
        if !mean.is_finite() || !params.as_slice().iter().all(|v| v.is_finite()) {
            return Err(Error::Divergence { epoch, period: None });
        }
        trace.push(mean);
    }
    Ok(TrainOutcome {
        params,
        loss_trace: trace,
    })
}
