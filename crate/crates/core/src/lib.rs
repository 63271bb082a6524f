//! Continual learning for streaming regression with density-based memory
//! selection and hint-based network learning.
//!
//! A stream arrives as a sequence of [`PeriodDataset`]s. After each period the
//! regressor `f = g ∘ h` is trained against the current batch, a fixed-budget
//! replay [`MemorySet`], and the frozen representation of the previous period's
//! model. The memory is then refreshed by weighted sampling whose weights mix
//! a kernel-density score with reservoir-style biased coefficients.

pub mod data;
pub mod density;
mod error;
pub mod harness;
pub mod memory;
pub mod model;

pub use data::{FeatureScaler, PeriodDataset, Sample, StreamConfig};
pub use density::{DensityModel, GmmFit, ShiftLevel};
pub use error::{Error, Result};
pub use harness::{MethodKind, MethodSpec, MetricsReport, PeriodRecord};
pub use memory::{MemoryEntry, MemorySet, WeightRule, WeightSet};
pub use model::{LossTerms, LossWeights, Optimizer, RegressorParams, TrainConfig};
