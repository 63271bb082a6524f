use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const VARIANCE_FLOOR: f64 = 1e-10;

const MAX_ITERATIONS: usize = 200;
const MIN_GAIN: f64 = 1e-8;
/// A component whose total responsibility falls below this is re-seeded.
const MIN_MASS: f64 = 1e-6;
const RESEED_SEED: u64 = 0x5eed;

/// Two-component univariate Gaussian mixture fitted by EM.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GmmFit {
    pub means: [f64; 2],
    pub variances: [f64; 2],
    pub mixing: [f64; 2],
    /// Log-likelihood evaluated before each M-step. Restarted whenever a
    /// collapsed component is re-seeded.
    pub log_likelihood_trace: Vec<f64>,
    pub reseeds: usize,
}

impl GmmFit {
    pub fn shift_level(&self) -> ShiftLevel {
        ShiftLevel::new((self.means[0] - self.means[1]).abs())
    }
}

/// Degree of distribution shift, clamped to `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct ShiftLevel(f64);

impl ShiftLevel {
    pub fn new(gamma: f64) -> Self {
        ShiftLevel(if gamma.is_nan() { 0.0 } else { gamma.clamp(0.0, 1.0) })
    }

    pub fn gamma(self) -> f64 {
        self.0
    }
}

/// Fits two Gaussians to `scores`. Scores are sorted first so the fit is a
/// function of the multiset alone.
pub fn fit_two_component(scores: &[f64]) -> Result<GmmFit> {
    if scores.len() < 2 {
        return Err(Error::invalid(format!(
            "shift level needs at least 2 scores, got {}",
            scores.len()
        )));
    }
    if !scores.iter().all(|s| s.is_finite()) {
        return Err(Error::NonFinite("density scores"));
    }
    let mut xs = scores.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;

    let mean = xs.iter().sum::<f64>() / n;
    let overall_var = (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).max(VARIANCE_FLOOR);

    let mut fit = GmmFit {
        means: [percentile(&xs, 0.25), percentile(&xs, 0.75)],
        variances: [overall_var; 2],
        mixing: [0.5, 0.5],
        log_likelihood_trace: Vec::new(),
        reseeds: 0,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(RESEED_SEED);
    let mut resp = vec![[0.0f64; 2]; xs.len()];

    for _ in 0..MAX_ITERATIONS {
        // E-step
        let mut ll = 0.0;
        for (x, r) in xs.iter().zip(resp.iter_mut()) {
            let lp = [0, 1].map(|c| {
                fit.mixing[c].ln() - 0.5 * (2.0 * PI * fit.variances[c]).ln()
                    - (x - fit.means[c]).powi(2) / (2.0 * fit.variances[c])
            });
            let top = lp[0].max(lp[1]);
            let lse = top + ((lp[0] - top).exp() + (lp[1] - top).exp()).ln();
            *r = [(lp[0] - lse).exp(), (lp[1] - lse).exp()];
            ll += lse;
        }
        let converged = fit
            .log_likelihood_trace
            .last()
            .is_some_and(|prev| ll - prev < MIN_GAIN);
        fit.log_likelihood_trace.push(ll);
        if converged {
            break;
        }

        // M-step
        let mass = [0, 1].map(|c| resp.iter().map(|r| r[c]).sum::<f64>());
        if let Some(c) = (0..2).find(|&c| mass[c] < MIN_MASS) {
            fit.means[c] = xs[rng.random_range(0..xs.len())];
            fit.variances[c] = overall_var;
            fit.mixing = [0.5, 0.5];
            fit.log_likelihood_trace.clear();
            fit.reseeds += 1;
            continue;
        }
        for c in 0..2 {
            let mu = xs.iter().zip(&resp).map(|(x, r)| r[c] * x).sum::<f64>() / mass[c];
            let var = xs
                .iter()
                .zip(&resp)
                .map(|(x, r)| r[c] * (x - mu).powi(2))
                .sum::<f64>()
                / mass[c];
            fit.means[c] = mu;
            fit.variances[c] = var.max(VARIANCE_FLOOR);
        }
        let p0 = mass[0] / (mass[0] + mass[1]);
        fit.mixing = [p0, 1.0 - p0];
    }
    Ok(fit)
}

/// `γ = |μ₁ − μ₂|` of a two-component mixture fitted to the density scores.
pub fn shift_level_score(scores: &[f64]) -> Result<ShiftLevel> {
    Ok(fit_two_component(scores)?.shift_level())
}

/// Linear-interpolation percentile of sorted data.
fn percentile(sorted: &[f64], p: f64) -> f64 {
    let pos = p * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::seq::SliceRandom;

    fn non_decreasing(trace: &[f64]) -> bool {
        trace.windows(2).all(|w| w[1] >= w[0] - 1e-9)
    }

    #[test]
    fn identical_scores_have_no_shift() {
        let fit = fit_two_component(&[0.7; 50]).unwrap();
        assert_eq!(fit.shift_level().gamma(), 0.0);
        assert!(non_decreasing(&fit.log_likelihood_trace));
    }

    #[test]
    fn two_delta_clusters() {
        let mut scores = vec![0.6; 500];
        scores.extend(vec![0.9; 500]);
        // oracle: the obvious split of the two clusters
        let lo: Vec<f64> = scores.iter().copied().filter(|s| *s < 0.75).collect();
        let hi: Vec<f64> = scores.iter().copied().filter(|s| *s >= 0.75).collect();
        let split_gap = hi.iter().sum::<f64>() / hi.len() as f64 - lo.iter().sum::<f64>() / lo.len() as f64;

        let fit = fit_two_component(&scores).unwrap();
        let gamma = fit.shift_level().gamma();
        assert!((gamma - 0.3).abs() < 1e-3, "gamma {gamma}");
        assert!((gamma - split_gap).abs() < 1e-3);
        assert!(non_decreasing(&fit.log_likelihood_trace));
        assert!((fit.mixing[0] + fit.mixing[1] - 1.0).abs() < 1e-12);
        assert!(fit.variances.iter().all(|v| *v >= VARIANCE_FLOOR));
    }

    #[test]
    fn permutation_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut scores: Vec<f64> = (0..300).map(|_| 0.5 + 0.5 * rng.random::<f64>()).collect();
        let a = shift_level_score(&scores).unwrap();
        scores.shuffle(&mut rng);
        let b = shift_level_score(&scores).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn too_few_scores() {
        assert!(shift_level_score(&[0.5]).is_err());
        assert!(shift_level_score(&[]).is_err());
    }

    #[test]
    fn gamma_is_clamped() {
        assert_eq!(ShiftLevel::new(3.0).gamma(), 1.0);
        assert_eq!(ShiftLevel::new(-1.0).gamma(), 0.0);
        let fit = fit_two_component(&[0.0, 0.0, 0.0, 5.0, 5.0, 5.0]).unwrap();
        assert_eq!(fit.shift_level().gamma(), 1.0);
    }

    #[test]
    fn percentile_interpolates() {
        let xs = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(percentile(&xs, 0.25), 2.0);
        assert_eq!(percentile(&[1.0, 2.0], 0.25), 1.25);
    }
}
