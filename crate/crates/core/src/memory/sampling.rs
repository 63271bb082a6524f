use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};

/// Fixed-size sampling without replacement whose first-order inclusion
/// probabilities are proportional to the weights.
///
/// Inclusion probabilities are `π_i = count · w_i / Σw`, with any item whose
/// `π_i` would exceed 1 taken with certainty and the remainder redistributed.
/// Items are visited in a random order and selected by systematic sampling:
/// one uniform start `u` and the points `u, u + 1, …, u + count − 1` laid over
/// the cumulative `π`. Returned indices are distinct and ascending.
pub fn weighted_sample_without_replacement<R: Rng + ?Sized>(
    weights: &[f64],
    count: usize,
    rng: &mut R,
) -> Result<Vec<usize>> {
    if count == 0 {
        return Err(Error::invalid("sample count must be at least 1"));
    }
    if weights.is_empty() {
        return Err(Error::Empty("weight set"));
    }
    if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w > 0.0)) {
        return Err(Error::invalid(format!("weights must be positive and finite, got {w}")));
    }
    if weights.len() <= count {
        return Ok((0..weights.len()).collect());
    }

    let pi = inclusion_probabilities(weights, count);
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.shuffle(rng);
    let mut next = rng.random::<f64>();

    let mut selected = vec![false; weights.len()];
    let mut taken = 0;
    let mut cumulative = 0.0;
    for &i in &order {
        cumulative += pi[i];
        if taken < count && cumulative > next {
            selected[i] = true;
            taken += 1;
            next += 1.0;
        }
    }
    // Rounding in the cumulative sum can leave the last point uncovered.
    if taken < count {
        let mut rest: Vec<usize> = (0..weights.len()).filter(|&i| !selected[i]).collect();
        rest.sort_by(|&a, &b| pi[b].total_cmp(&pi[a]).then(a.cmp(&b)));
        for i in rest.into_iter().take(count - taken) {
            selected[i] = true;
        }
    }
    Ok((0..weights.len()).filter(|&i| selected[i]).collect())
}

/// `π_i = min(1, c · w_i)` with `c` chosen so that `Σ π_i = count`.
pub fn inclusion_probabilities(weights: &[f64], count: usize) -> Vec<f64> {
    let n = weights.len();
    if n <= count {
        return vec![1.0; n];
    }
    let mut certain = vec![false; n];
    loop {
        let remaining = count - certain.iter().filter(|&&c| c).count();
        let mass: f64 = weights
            .iter()
            .zip(&certain)
            .filter(|(_, &c)| !c)
            .map(|(w, _)| w)
            .sum();
        let scale = remaining as f64 / mass;
        let mut changed = false;
        for (w, c) in weights.iter().zip(certain.iter_mut()) {
            if !*c && w * scale >= 1.0 {
                *c = true;
                changed = true;
            }
        }
        if !changed {
            return weights
                .iter()
                .zip(&certain)
                .map(|(w, &c)| if c { 1.0 } else { w * scale })
                .collect();
        }
    }
}
