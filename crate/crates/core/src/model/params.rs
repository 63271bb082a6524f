use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Parameters of a one-hidden-layer network.
///
/// `h(x) = tanh(W_h x + b_h)` maps `k` inputs to an `r`-wide representation,
/// `g(z) = W_g z + b_g` maps it to `m` outputs. All four blocks live in one
/// flat buffer, in the order `W_h` (row-major `r × k`), `b_h`, `W_g`
/// (row-major `m × r`), `b_g`.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressorParams {
    input_dim: usize,
    hidden_dim: usize,
    output_dim: usize,
    values: Vec<f64>,
}

impl RegressorParams {
    pub fn zeros(input_dim: usize, hidden_dim: usize, output_dim: usize) -> Self {
        let len = hidden_dim * input_dim + hidden_dim + output_dim * hidden_dim + output_dim;
        RegressorParams {
            input_dim,
            hidden_dim,
            output_dim,
            values: vec![0.0; len],
        }
    }

    /// Fan-in uniform initialization: each layer draws from
    /// `U(−1/√fan_in, 1/√fan_in)`.
    pub fn init<R: Rng + ?Sized>(input_dim: usize, hidden_dim: usize, output_dim: usize, rng: &mut R) -> Self {
        let mut p = Self::zeros(input_dim, hidden_dim, output_dim);
        let split = hidden_dim * input_dim + hidden_dim;
        let (first, second) = p.values.split_at_mut(split);
        let a = 1.0 / (input_dim as f64).sqrt();
        first.iter_mut().for_each(|v| *v = rng.random_range(-a..a));
        let a = 1.0 / (hidden_dim as f64).sqrt();
        second.iter_mut().for_each(|v| *v = rng.random_range(-a..a));
        p
    }

    pub fn from_flat(input_dim: usize, hidden_dim: usize, output_dim: usize, values: Vec<f64>) -> Result<Self> {
        let p = Self::zeros(input_dim, hidden_dim, output_dim);
        if values.len() != p.values.len() {
            return Err(Error::DimensionMismatch {
                expected: p.values.len(),
                found: values.len(),
            });
        }
        if !values.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("parameters"));
        }
        Ok(RegressorParams { values, ..p })
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn hidden_dim(&self) -> usize {
        self.hidden_dim
    }

    pub fn output_dim(&self) -> usize {
        self.output_dim
    }

    /// `(k, r, m)`
    pub fn signature(&self) -> (usize, usize, usize) {
        (self.input_dim, self.hidden_dim, self.output_dim)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    fn offsets(&self) -> [usize; 4] {
        let (k, r, m) = self.signature();
        let b_h = r * k;
        let w_g = b_h + r;
        let b_g = w_g + m * r;
        [0, b_h, w_g, b_g]
    }

    pub fn w_h(&self) -> &[f64] {
        let o = self.offsets();
        &self.values[o[0]..o[1]]
    }

    pub fn b_h(&self) -> &[f64] {
        let o = self.offsets();
        &self.values[o[1]..o[2]]
    }

    pub fn w_g(&self) -> &[f64] {
        let o = self.offsets();
        &self.values[o[2]..o[3]]
    }

    pub fn b_g(&self) -> &[f64] {
        let o = self.offsets();
        &self.values[o[3]..]
    }

    /// Mutable views of `(W_h, b_h, W_g, b_g)`.
    pub fn blocks_mut(&mut self) -> (&mut [f64], &mut [f64], &mut [f64], &mut [f64]) {
        let o = self.offsets();
        let (w_h, rest) = self.values.split_at_mut(o[1]);
        let (b_h, rest) = rest.split_at_mut(o[2] - o[1]);
        let (w_g, b_g) = rest.split_at_mut(o[3] - o[2]);
        (w_h, b_h, w_g, b_g)
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.input_dim {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim,
                found: x.len(),
            });
        }
        Ok(())
    }

    /// Returns `(z, ŷ)` with `z = h(x)` and `ŷ = g(z)`.
    pub fn forward(&self, x: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        self.check_input(x)?;
        let z = self.represent_unchecked(x);
        let y = self.head(&z);
        Ok((z, y))
    }

    pub fn represent(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_input(x)?;
        Ok(self.represent_unchecked(x))
    }

    pub fn predict(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.forward(x)?.1)
    }

    pub(crate) fn represent_unchecked(&self, x: &[f64]) -> Vec<f64> {
        self.w_h()
            .chunks_exact(self.input_dim)
            .zip(self.b_h())
            .map(|(row, b)| (row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + b).tanh())
            .collect()
    }

    pub(crate) fn head(&self, z: &[f64]) -> Vec<f64> {
        self.w_g()
            .chunks_exact(self.hidden_dim)
            .zip(self.b_g())
            .map(|(row, b)| row.iter().zip(z).map(|(w, v)| w * v).sum::<f64>() + b)
            .collect()
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        let (k, r, m) = self.signature();
        Checkpoint {
            input_dim: k,
            hidden_dim: r,
            output_dim: m,
            shapes: CheckpointShapes {
                w_h: [r, k],
                b_h: [r],
                w_g: [m, r],
                b_g: [m],
            },
            w_h: self.w_h().to_vec(),
            b_h: self.b_h().to_vec(),
            w_g: self.w_g().to_vec(),
            b_g: self.b_g().to_vec(),
        }
    }

    pub fn from_checkpoint(c: Checkpoint) -> Result<Self> {
        let (k, r, m) = (c.input_dim, c.hidden_dim, c.output_dim);
        let expected = CheckpointShapes {
            w_h: [r, k],
            b_h: [r],
            w_g: [m, r],
            b_g: [m],
        };
        if c.shapes != expected {
            return Err(Error::invalid("checkpoint shapes disagree with its (k, r, m) signature"));
        }
        let values = [c.w_h, c.b_h, c.w_g, c.b_g];
        let blocks_ok = values[0].len() == r * k
            && values[1].len() == r
            && values[2].len() == m * r
            && values[3].len() == m;
        if !blocks_ok {
            return Err(Error::invalid("checkpoint block length disagrees with its shape"));
        }
        Self::from_flat(k, r, m, values.concat())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let json = serde_json::to_string_pretty(&self.to_checkpoint())?;
        std::fs::write(path, json).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_checkpoint(serde_json::from_str(&text)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckpointShapes {
    pub w_h: [usize; 2],
    pub b_h: [usize; 1],
    pub w_g: [usize; 2],
    pub b_g: [usize; 1],
}

/// On-disk model format. Numbers are written in shortest round-trip decimal
/// form, so a save/load cycle is bit-exact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Checkpoint {
    pub input_dim: usize,
    pub hidden_dim: usize,
    pub output_dim: usize,
    pub shapes: CheckpointShapes,
    pub w_h: Vec<f64>,
    pub b_h: Vec<f64>,
    pub w_g: Vec<f64>,
    pub b_g: Vec<f64>,
}
