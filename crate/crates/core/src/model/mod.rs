//! The regressor `f = g ∘ h`, its hint-based training objective, and the
//! per-period trainer.

mod loss;
mod params;
mod train;

pub use loss::{gradient, loss_terms, mae, LossTerms, LossWeights, Objective};
pub use params::{Checkpoint, RegressorParams};
pub use train::{train_period, train_period_weighted, Optimizer, TrainConfig, TrainOutcome};
