//! Gaussian kernel density estimation over memory inputs and the two scores
//! derived from it: a per-sample density score and a stream-level shift score.

mod gmm;
mod kde;

pub use gmm::{fit_two_component, shift_level_score, GmmFit, ShiftLevel, VARIANCE_FLOOR};
pub use kde::{
    default_bandwidth_grid, density_score, fit_bandwidth_mlcv, loo_log_likelihood, DensityModel,
    LOG_DENSITY_FLOOR,
};
