//! Experiment orchestration: method variants, evaluation sets, FE/PE, and
//! diagnostics.

mod pca;
mod report;

use std::fmt;
use std::str::FromStr;

use log::info;
use rand::seq::SliceRandom;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::{apply_scaler, fit_scaler, FeatureScaler, PeriodDataset, Sample};
use crate::error::{Error, Result};
use crate::memory::{update_memory, MemorySet, WeightRule};
use crate::model::{train_period, LossWeights, RegressorParams, TrainConfig};

pub use pca::{pca_project_2d, Projection};
pub use report::{
    summarize, write_metrics_json, write_periods_csv, write_projection_csv, write_summary_csv, MethodSummary,
    ProjectionRow,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodKind {
    Dmshm,
    DmshmNoDms,
    DmshmNoHint,
    Finetune,
}

impl MethodKind {
    pub const ALL: [MethodKind; 4] = [
        MethodKind::Dmshm,
        MethodKind::DmshmNoDms,
        MethodKind::DmshmNoHint,
        MethodKind::Finetune,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MethodKind::Dmshm => "dmshm",
            MethodKind::DmshmNoDms => "dmshm_no_dms",
            MethodKind::DmshmNoHint => "dmshm_no_hint",
            MethodKind::Finetune => "finetune",
        }
    }
}

impl fmt::Display for MethodKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MethodKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        MethodKind::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| {
                let names: Vec<&str> = MethodKind::ALL.iter().map(|m| m.name()).collect();
                Error::invalid(format!("unknown method `{s}`; expected one of {}", names.join(", ")))
            })
    }
}

/// A method variant with optional overrides of the shared loss weights and
/// memory budget.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MethodSpec {
    pub kind: MethodKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub loss_weights: Option<LossWeights>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget: Option<usize>,
}

impl MethodSpec {
    pub fn new(kind: MethodKind) -> Self {
        MethodSpec {
            kind,
            loss_weights: None,
            budget: None,
        }
    }

    /// Effective `(loss weights, memory budget, weight rule)`.
    ///
    /// * `finetune`: no memory and only the current-batch term.
    /// * `dmshm_no_dms`: reservoir weights (γ ≡ 1).
    /// * `dmshm_no_hint`: ξ = 0.
    pub fn resolve(&self, weights: LossWeights, budget: usize) -> (LossWeights, usize, Option<WeightRule>) {
        let weights = self.loss_weights.unwrap_or(weights);
        let budget = self.budget.unwrap_or(budget);
        match self.kind {
            MethodKind::Dmshm => (weights, budget, Some(WeightRule::Density)),
            MethodKind::DmshmNoDms => (weights, budget, Some(WeightRule::Reservoir)),
            MethodKind::DmshmNoHint => (LossWeights { xi: 0.0, ..weights }, budget, Some(WeightRule::Density)),
            MethodKind::Finetune => (
                LossWeights {
                    alpha: 0.0,
                    beta: 0.0,
                    xi: 0.0,
                    ..weights
                },
                0,
                None,
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodRecord {
    pub period: usize,
    pub historical_mse: f64,
    pub future_mse: f64,
    /// Balance factor used by the memory update; absent without memory.
    pub gamma: Option<f64>,
    /// KDE bandwidth of the memory update; absent when no density was fitted.
    pub bandwidth: Option<f64>,
    pub train_loss_final: f64,
    pub memory_size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub method: MethodSpec,
    pub seed: u64,
    pub records: Vec<PeriodRecord>,
    /// Mean historical-set MSE over all periods.
    pub fe: f64,
    /// Future-set MSE after the final period.
    pub pe: f64,
}

impl MetricsReport {
    pub fn from_records(method: MethodSpec, seed: u64, records: Vec<PeriodRecord>) -> Result<Self> {
        let last = records.last().ok_or(Error::Empty("period records"))?;
        let pe = last.future_mse;
        let fe = records.iter().map(|r| r.historical_mse).sum::<f64>() / records.len() as f64;
        Ok(MetricsReport {
            method,
            seed,
            records,
            fe,
            pe,
        })
    }
}

/// Splits off the evaluation sets: `historical` is period 1 verbatim,
/// `future` a seeded uniform draw of `⌈fraction · Σ N⌉` samples from all
/// periods (in draw order).
pub fn build_eval_sets(
    stream: &[PeriodDataset],
    future_fraction: f64,
    seed: u64,
) -> Result<(PeriodDataset, PeriodDataset)> {
    let first = stream.first().ok_or(Error::Empty("stream"))?;
    if !(future_fraction > 0.0 && future_fraction <= 1.0) {
        return Err(Error::invalid(format!("future_fraction must lie in (0, 1], got {future_fraction}")));
    }
    let all: Vec<&Sample> = stream.iter().flat_map(PeriodDataset::iter).collect();
    let count = ((future_fraction * all.len() as f64).ceil() as usize).clamp(1, all.len());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..all.len()).collect();
    order.shuffle(&mut rng);
    let future = order[..count].iter().map(|&i| all[i].clone()).collect();
    Ok((first.clone(), PeriodDataset::new(0, future)?))
}

/// Mean over samples of the per-dimension mean squared error.
pub fn mse(params: &RegressorParams, dataset: &PeriodDataset) -> Result<f64> {
    let mut total = 0.0;
    for s in dataset {
        let yhat = params.predict(&s.x)?;
        total += squared_error(&yhat, &s.y);
    }
    Ok(total / dataset.len() as f64)
}

fn squared_error(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| (u - v).powi(2)).sum::<f64>() / a.len() as f64
}

/// Standardizes inputs and targets with statistics of the first period and
/// maps predictions back to original target units.
#[derive(Debug, Clone, PartialEq)]
pub struct StreamScaling {
    pub inputs: FeatureScaler,
    pub targets: FeatureScaler,
}

impl StreamScaling {
    pub fn fit(first: &PeriodDataset) -> Result<Self> {
        let one = std::slice::from_ref(first);
        Ok(StreamScaling {
            inputs: fit_scaler(one)?,
            targets: FeatureScaler::fit_targets(one)?,
        })
    }

    pub fn apply(&self, dataset: &PeriodDataset) -> Result<PeriodDataset> {
        self.targets.apply_targets(&apply_scaler(&self.inputs, dataset)?)
    }

    /// MSE of a model trained in scaled space, measured on raw data in
    /// original target units.
    pub fn mse(&self, params: &RegressorParams, raw: &PeriodDataset) -> Result<f64> {
        let mut total = 0.0;
        for s in raw {
            let yhat = self.targets.inverse(&params.predict(&self.inputs.transform(&s.x))?);
            total += squared_error(&yhat, &s.y);
        }
        Ok(total / raw.len() as f64)
    }
}

fn check_stream(stream: &[PeriodDataset]) -> Result<()> {
    let first = stream.first().ok_or(Error::Empty("stream"))?;
    for p in stream {
        if p.input_dim() != first.input_dim() || p.target_dim() != first.target_dim() {
            return Err(Error::DimensionMismatch {
                expected: first.input_dim(),
                found: p.input_dim(),
            });
        }
    }
    Ok(())
}

/// Runs the continual-learning loop over `stream`: per period, train, evaluate
/// on the historical and future sets, then fold the period into memory.
pub fn run_experiment(
    stream: &[PeriodDataset],
    method: &MethodSpec,
    train: &TrainConfig,
    budget: usize,
    future_fraction: f64,
    seed: u64,
) -> Result<MetricsReport> {
    check_stream(stream)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (historical, future) = build_eval_sets(stream, future_fraction, rng.next_u64())?;
    let scaling = StreamScaling::fit(&stream[0])?;
    let (loss_weights, budget, rule) = method.resolve(train.loss_weights, budget);

    let mut memory = MemorySet::new(budget);
    let mut prev: Option<RegressorParams> = None;
    let mut records = Vec::with_capacity(stream.len());
    for raw in stream {
        let period = raw.index;
        let train_seed = rng.next_u64();
        let memory_seed = rng.next_u64();
        let data = scaling.apply(raw)?;
        let config = TrainConfig {
            loss_weights,
            seed: train_seed,
            ..train.clone()
        };
        let outcome = train_period(prev.as_ref(), &memory, &data, &config).map_err(|e| match e {
            Error::Divergence { epoch, .. } => Error::Divergence {
                epoch,
                period: Some(period),
            },
            other => other,
        })?;
        let params = outcome.params;
        let historical_mse = scaling.mse(&params, &historical)?;
        let future_mse = scaling.mse(&params, &future)?;

        let (mut gamma, mut bandwidth) = (None, None);
        if let (Some(rule), true) = (rule, budget > 0) {
            let update = update_memory(&memory, &data, |x| params.represent_unchecked(x), rule, memory_seed)?;
            gamma = Some(update.gamma);
            bandwidth = update.bandwidth;
            memory = update.memory;
        }
        info!(
            "{} seed {seed} period {period}: historical {historical_mse:.5} future {future_mse:.5} gamma {} memory {}",
            method.kind,
            gamma.map_or("-".to_string(), |g| format!("{g:.4}")),
            memory.len()
        );
        records.push(PeriodRecord {
            period,
            historical_mse,
            future_mse,
            gamma,
            bandwidth,
            train_loss_final: outcome.loss_trace.last().copied().unwrap_or(f64::NAN),
            memory_size: memory.len(),
        });
        prev = Some(params);
    }
    MetricsReport::from_records(method.clone(), seed, records)
}

/// 2-D principal-component coordinates of every sample in the stream,
/// computed on inputs standardized by the first period.
pub fn project_stream(stream: &[PeriodDataset]) -> Result<Vec<ProjectionRow>> {
    check_stream(stream)?;
    let scaler = fit_scaler(&stream[..1])?;
    let mut labels = Vec::new();
    let mut points = Vec::new();
    for p in stream {
        for s in p {
            labels.push(p.index);
            points.push(scaler.transform(&s.x));
        }
    }
    let projection = pca_project_2d(&points)?;
    Ok(labels
        .into_iter()
        .zip(projection.coords)
        .map(|(period, [x1, x2])| ProjectionRow { period, x1, x2 })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{generate_synthetic_stream, StreamConfig};

    fn small_stream(seed: u64) -> Vec<PeriodDataset> {
        let mut cfg = StreamConfig::preset("drift8", seed).unwrap();
        cfg.samples_per_period = 40;
        generate_synthetic_stream(&cfg).unwrap()
    }

    fn quick_train() -> TrainConfig {
        TrainConfig {
            epochs: 3,
            hidden_dim: 8,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn eval_sets() {
        let stream = small_stream(1);
        let (hist, fut) = build_eval_sets(&stream, 0.1, 5).unwrap();
        assert_eq!(hist, stream[0]);
        assert_eq!(fut.len(), 32);
        let (_, again) = build_eval_sets(&stream, 0.1, 5).unwrap();
        assert_eq!(fut, again);

        let (_, all) = build_eval_sets(&stream, 1.0, 5).unwrap();
        let key = |s: &Sample| format!("{:?}", s);
        let mut a: Vec<String> = all.iter().map(key).collect();
        let mut b: Vec<String> = stream.iter().flat_map(|p| p.iter()).map(key).collect();
        a.sort();
        b.sort();
        assert_eq!(a, b);

        assert!(build_eval_sets(&[], 0.1, 0).is_err());
        assert!(build_eval_sets(&stream, 0.0, 0).is_err());
    }

    #[test]
    fn eval_set_ceiling() {
        let cfg = StreamConfig {
            samples_per_period: 100,
            ..StreamConfig::preset("drift8", 2).unwrap()
        };
        let stream = generate_synthetic_stream(&cfg).unwrap();
        let (_, fut) = build_eval_sets(&stream, 0.1, 1).unwrap();
        assert_eq!(fut.len(), 80);
        let (_, fut) = build_eval_sets(&stream, 0.001, 1).unwrap();
        assert_eq!(fut.len(), 1);
    }

    #[test]
    fn mse_hand_values() {
        let p = RegressorParams::zeros(1, 2, 1);
        let d = PeriodDataset::new(
            1,
            vec![Sample::new(vec![0.0], vec![1.0]).unwrap(), Sample::new(vec![3.0], vec![-1.0]).unwrap()],
        )
        .unwrap();
        assert_eq!(mse(&p, &d).unwrap(), 1.0);
        let d = PeriodDataset::new(
            1,
            vec![Sample::new(vec![0.0], vec![3.0]).unwrap(), Sample::new(vec![0.0], vec![-4.0]).unwrap()],
        )
        .unwrap();
        assert_eq!(mse(&p, &d).unwrap(), 12.5);
    }

    #[test]
    fn fe_is_mean_of_historical() {
        let rec = |period, h| PeriodRecord {
            period,
            historical_mse: h,
            future_mse: h + 1.0,
            gamma: None,
            bandwidth: None,
            train_loss_final: 0.0,
            memory_size: 0,
        };
        let r = MetricsReport::from_records(
            MethodSpec::new(MethodKind::Dmshm),
            0,
            vec![rec(1, 2.0), rec(2, 4.0), rec(3, 6.0)],
        )
        .unwrap();
        assert_eq!(r.fe, 4.0);
        assert_eq!(r.pe, 7.0);
    }

    #[test]
    fn run_produces_one_record_per_period() {
        let stream = small_stream(3);
        let r = run_experiment(&stream, &MethodSpec::new(MethodKind::Dmshm), &quick_train(), 10, 0.1, 4).unwrap();
        assert_eq!(r.records.len(), 8);
        assert!(r.records.iter().all(|p| p.memory_size == 10));
        assert_eq!(r.records[0].gamma, Some(1.0));
        assert!(r.records[1].bandwidth.is_some());
        let again = run_experiment(&stream, &MethodSpec::new(MethodKind::Dmshm), &quick_train(), 10, 0.1, 4).unwrap();
        assert_eq!(r, again);
    }

    #[test]
    fn finetune_never_allocates_memory() {
        let stream = small_stream(4);
        let r = run_experiment(&stream, &MethodSpec::new(MethodKind::Finetune), &quick_train(), 10, 0.1, 4).unwrap();
        assert!(r.records.iter().all(|p| p.memory_size == 0 && p.gamma.is_none()));
    }

    #[test]
    fn resolve_variants() {
        let w = LossWeights::default();
        let (lw, b, rule) = MethodSpec::new(MethodKind::Finetune).resolve(w, 50);
        assert_eq!((lw.alpha, lw.beta, lw.xi, lw.delta, b, rule), (0.0, 0.0, 0.0, 1.0, 0, None));
        let (lw, _, rule) = MethodSpec::new(MethodKind::DmshmNoHint).resolve(w, 50);
        assert_eq!((lw.xi, lw.alpha, rule), (0.0, 1.0, Some(WeightRule::Density)));
        let (_, _, rule) = MethodSpec::new(MethodKind::DmshmNoDms).resolve(w, 50);
        assert_eq!(rule, Some(WeightRule::Reservoir));
        assert_eq!("dmshm_no_dms".parse::<MethodKind>().unwrap(), MethodKind::DmshmNoDms);
        assert!("dms".parse::<MethodKind>().is_err());
    }

    #[test]
    fn projection_labels_every_sample() {
        let stream = small_stream(5);
        let rows = project_stream(&stream).unwrap();
        assert_eq!(rows.len(), 8 * 40);
        assert_eq!(rows[0].period, 1);
        assert_eq!(rows.last().unwrap().period, 8);
    }
}
