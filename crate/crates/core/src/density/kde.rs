use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Floor applied to `ln d` in the leave-one-out score so that isolated points
/// contribute a finite penalty instead of `-inf`.
pub const LOG_DENSITY_FLOOR: f64 = -745.0;

const GRID_LEN: usize = 20;
const GRID_LOW: f64 = 0.05;
const GRID_HIGH: f64 = 5.0;

/// Gaussian KDE with one scalar bandwidth shared by all dimensions:
/// `d(x) = 1 / (n b^k) Σ_i K((x - x_i) / b)`, `K(u) = (2π)^{-k/2} exp(-|u|²/2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityModel {
    points: Vec<Vec<f64>>,
    bandwidth: f64,
    dim: usize,
}

impl DensityModel {
    pub fn new(points: Vec<Vec<f64>>, bandwidth: f64) -> Result<Self> {
        let dim = check_points(&points, 1)?;
        if !(bandwidth.is_finite() && bandwidth > 0.0) {
            return Err(Error::invalid(format!("bandwidth must be positive, got {bandwidth}")));
        }
        Ok(DensityModel {
            points,
            bandwidth,
            dim,
        })
    }

    /// Fits the bandwidth by leave-one-out likelihood over the default grid.
    /// With a single point there is nothing to cross-validate and the
    /// bandwidth falls back to 1 (unit scale for standardized inputs).
    pub fn fit(points: Vec<Vec<f64>>) -> Result<Self> {
        check_points(&points, 1)?;
        let bandwidth = if points.len() < 2 {
            1.0
        } else {
            fit_bandwidth_mlcv(&points, &default_bandwidth_grid(&points))?
        };
        Self::new(points, bandwidth)
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn density(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: x.len(),
            });
        }
        let h2 = 2.0 * self.bandwidth * self.bandwidth;
        let sum: f64 = self
            .points
            .iter()
            .map(|p| (-squared_distance(p, x) / h2).exp())
            .sum();
        Ok(sum * normalizer(self.points.len(), self.bandwidth, self.dim))
    }
}

fn check_points(points: &[Vec<f64>], min: usize) -> Result<usize> {
    if points.len() < min {
        return Err(Error::invalid(format!(
            "need at least {min} points, got {}",
            points.len()
        )));
    }
    let dim = points[0].len();
    if dim == 0 {
        return Err(Error::Empty("kde point"));
    }
    for p in points {
        if p.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: p.len(),
            });
        }
        if !p.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("kde point"));
        }
    }
    Ok(dim)
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| (u - v) * (u - v)).sum()
}

/// `1 / (n b^k (2π)^{k/2})`
fn normalizer(n: usize, bandwidth: f64, dim: usize) -> f64 {
    let k = dim as f64;
    (-(n as f64).ln() - k * bandwidth.ln() - 0.5 * k * (2.0 * PI).ln()).exp()
}

/// Leave-one-out log-likelihood `Σ_i ln d_{-i}(x_i)` for one bandwidth, each
/// term floored at [`LOG_DENSITY_FLOOR`].
pub fn loo_log_likelihood(points: &[Vec<f64>], bandwidth: f64) -> Result<f64> {
    let dim = check_points(points, 2)?;
    let sq = pairwise_squared(points);
    Ok(loo_from_distances(&sq, points.len(), dim, bandwidth))
}

fn pairwise_squared(points: &[Vec<f64>]) -> Vec<f64> {
    let n = points.len();
    let mut sq = vec![0.0; n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let d = squared_distance(&points[i], &points[j]);
            sq[i * n + j] = d;
            sq[j * n + i] = d;
        }
    }
    sq
}

fn loo_from_distances(sq: &[f64], n: usize, dim: usize, bandwidth: f64) -> f64 {
    let h2 = 2.0 * bandwidth * bandwidth;
    let norm = normalizer(n - 1, bandwidth, dim);
    (0..n)
        .map(|i| {
            let row = &sq[i * n..(i + 1) * n];
            let s: f64 = row
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, d)| (-d / h2).exp())
                .sum();
            (s * norm).ln().max(LOG_DENSITY_FLOOR)
        })
        .sum()
}

/// Maximum-likelihood cross-validation: the grid value with the largest
/// leave-one-out log-likelihood. Ties go to the larger bandwidth.
pub fn fit_bandwidth_mlcv(points: &[Vec<f64>], grid: &[f64]) -> Result<f64> {
    let dim = check_points(points, 2)?;
    if grid.is_empty() {
        return Err(Error::Empty("bandwidth grid"));
    }
    if let Some(bad) = grid.iter().find(|b| !(b.is_finite() && **b > 0.0)) {
        return Err(Error::invalid(format!("non-positive bandwidth candidate {bad}")));
    }
    let sq = pairwise_squared(points);
    let mut best = (f64::NEG_INFINITY, grid[0]);
    for &b in grid {
        let score = loo_from_distances(&sq, points.len(), dim, b);
        if score > best.0 || (score == best.0 && b > best.1) {
            best = (score, b);
        }
    }
    Ok(best.1)
}

/// Twenty log-spaced candidates from `0.05 σ̄` to `5 σ̄`, where `σ̄` is the mean
/// per-dimension standard deviation of the points (1 if the points are all
/// identical).
pub fn default_bandwidth_grid(points: &[Vec<f64>]) -> Vec<f64> {
    let sigma = mean_stddev(points);
    let sigma = if sigma.is_finite() && sigma > 0.0 { sigma } else { 1.0 };
    let (lo, hi) = ((GRID_LOW * sigma).ln(), (GRID_HIGH * sigma).ln());
    (0..GRID_LEN)
        .map(|i| (lo + (hi - lo) * i as f64 / (GRID_LEN - 1) as f64).exp())
        .collect()
}

fn mean_stddev(points: &[Vec<f64>]) -> f64 {
    let Some(first) = points.first() else {
        return 0.0;
    };
    let n = points.len() as f64;
    let dim = first.len();
    let total: f64 = (0..dim)
        .map(|j| {
            let mean = points.iter().map(|p| p[j]).sum::<f64>() / n;
            (points.iter().map(|p| (p[j] - mean).powi(2)).sum::<f64>() / n).sqrt()
        })
        .sum();
    total / dim as f64
}

/// Sigmoid of a density value; maps `[0, ∞)` into `[0.5, 1)`.
pub fn density_score(d: f64) -> Result<f64> {
    if !d.is_finite() || d < 0.0 {
        return Err(Error::invalid(format!("density must be finite and non-negative, got {d}")));
    }
    Ok(1.0 / (1.0 + (-d).exp()))
}
