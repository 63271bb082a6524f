use serde::{Deserialize, Serialize};

use super::RegressorParams;
use crate::data::Sample;
use crate::error::{Error, Result};
use crate::memory::MemoryEntry;

/// Coefficients of the total loss
/// `α·L_repr + β·L_pred + ξ·L_hint + δ·L_cur`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LossWeights {
    /// Memory representation term.
    pub alpha: f64,
    /// Memory prediction term.
    pub beta: f64,
    /// Hint term on the current batch.
    pub xi: f64,
    /// Current-batch prediction term.
    pub delta: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        LossWeights {
            alpha: 1.0,
            beta: 1.0,
            xi: 1.0,
            delta: 1.0,
        }
    }
}

impl LossWeights {
    pub fn validate(&self) -> Result<()> {
        let all = [self.alpha, self.beta, self.xi, self.delta];
        if all.iter().all(|w| w.is_finite() && *w >= 0.0) {
            Ok(())
        } else {
            Err(Error::invalid(format!("loss weights must be finite and non-negative: {self:?}")))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LossTerms {
    pub total: f64,
    pub hint: f64,
    pub memory_repr: f64,
    pub memory_pred: f64,
    pub current: f64,
}

/// Mean absolute error between two equal-length vectors.
pub fn mae(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| (u - v).abs()).sum::<f64>() / a.len() as f64
}

fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// The training objective for one step: a batch from the current period,
/// the replay memory, and optionally the frozen teacher's hints for the batch.
#[derive(Debug, Clone, Copy)]
pub struct Objective<'a> {
    pub batch: &'a [Sample],
    /// `h_prev(x)` for each batch sample; `None` when there is no previous model.
    pub hints: Option<&'a [Vec<f64>]>,
    pub memory: &'a [MemoryEntry],
    /// Per-sample weights for the current-batch term; uniform when `None`.
    pub sample_weights: Option<&'a [f64]>,
    pub weights: LossWeights,
}

impl<'a> Objective<'a> {
    fn validate(&self, params: &RegressorParams) -> Result<()> {
        if self.batch.is_empty() {
            return Err(Error::Empty("training batch"));
        }
        let (k, r, m) = params.signature();
        for s in self.batch {
            if s.x.len() != k || s.y.len() != m {
                return Err(Error::DimensionMismatch {
                    expected: k,
                    found: s.x.len(),
                });
            }
        }
        if let Some(h) = self.hints {
            if h.len() != self.batch.len() || h.iter().any(|z| z.len() != r) {
                return Err(Error::invalid("hints must align with the batch and have width r"));
            }
        }
        if let Some(w) = self.sample_weights {
            if w.len() != self.batch.len() || w.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                return Err(Error::invalid("sample weights must align with the batch and be non-negative"));
            }
            if w.iter().sum::<f64>() <= 0.0 {
                return Err(Error::invalid("sample weights sum to zero"));
            }
        }
        for e in self.memory {
            if e.x.len() != k || e.z.len() != r || e.y.len() != m {
                return Err(Error::invalid("memory entry shape disagrees with the model"));
            }
        }
        Ok(())
    }

    pub fn terms(&self, params: &RegressorParams) -> Result<LossTerms> {
        self.evaluate(params, None)
    }

    /// Loss terms and the gradient of the total with respect to every
    /// parameter, laid out like [`RegressorParams::as_slice`].
    pub fn terms_and_gradient(&self, params: &RegressorParams) -> Result<(LossTerms, RegressorParams)> {
        let (k, r, m) = params.signature();
        let mut grad = RegressorParams::zeros(k, r, m);
        let terms = self.evaluate(params, Some(&mut grad))?;
        if !grad.as_slice().iter().all(|g| g.is_finite()) {
            return Err(Error::NonFinite("gradient"));
        }
        Ok((terms, grad))
    }

    fn evaluate(&self, params: &RegressorParams, mut grad: Option<&mut RegressorParams>) -> Result<LossTerms> {
        self.validate(params)?;
        let w = self.weights;
        let (r, m) = (params.hidden_dim() as f64, params.output_dim() as f64);
        let mut terms = LossTerms::default();
        let mut dz = vec![0.0; params.hidden_dim()];
        let mut dy = vec![0.0; params.output_dim()];

        let n = self.batch.len() as f64;
        let weight_sum = self.sample_weights.map_or(n, |ws| ws.iter().sum());
        for (i, s) in self.batch.iter().enumerate() {
            let z = params.represent_unchecked(&s.x);
            let yhat = params.head(&z);
            let share = self.sample_weights.map_or(1.0, |ws| ws[i]) / weight_sum;
            terms.current += share * mae(&yhat, &s.y);
            let hint = self.hints.map(|h| &h[i]);
            if let Some(h) = hint {
                terms.hint += mae(h, &z) / n;
            }
            if let Some(g) = grad.as_deref_mut() {
                let mut active = false;
                dz.fill(0.0);
                dy.fill(0.0);
                if w.delta != 0.0 {
                    let c = w.delta * share / m;
                    for ((d, a), b) in dy.iter_mut().zip(&yhat).zip(&s.y) {
                        *d += c * sign(a - b);
                    }
                    active = true;
                }
                if let (Some(h), true) = (hint, w.xi != 0.0) {
                    let c = w.xi / (n * r);
                    for ((d, a), b) in dz.iter_mut().zip(&z).zip(h) {
                        *d += c * sign(a - b);
                    }
                    active = true;
                }
                if active {
                    backprop(params, &s.x, &z, &dy, &dz, g);
                }
            }
        }

        if !self.memory.is_empty() {
            let n = self.memory.len() as f64;
            for e in self.memory {
                let z = params.represent_unchecked(&e.x);
                let yhat = params.head(&z);
                terms.memory_repr += mae(&e.z, &z) / n;
                terms.memory_pred += mae(&e.y, &yhat) / n;
                if let Some(g) = grad.as_deref_mut() {
                    if w.alpha == 0.0 && w.beta == 0.0 {
                        continue;
                    }
                    dz.fill(0.0);
                    dy.fill(0.0);
                    if w.alpha != 0.0 {
                        let c = w.alpha / (n * r);
                        for ((d, a), b) in dz.iter_mut().zip(&z).zip(&e.z) {
                            *d += c * sign(a - b);
                        }
                    }
                    if w.beta != 0.0 {
                        let c = w.beta / (n * m);
                        for ((d, a), b) in dy.iter_mut().zip(&yhat).zip(&e.y) {
                            *d += c * sign(a - b);
                        }
                    }
                    backprop(params, &e.x, &z, &dy, &dz, g);
                }
            }
        }

        terms.total =
            (w.alpha * terms.memory_repr + w.beta * terms.memory_pred) + w.xi * terms.hint + w.delta * terms.current;
        if !terms.total.is_finite() {
            return Err(Error::NonFinite("loss"));
        }
        Ok(terms)
    }
}

/// Accumulates the parameter gradient of one sample given `∂L/∂ŷ` and the
/// direct part of `∂L/∂z`.
fn backprop(params: &RegressorParams, x: &[f64], z: &[f64], dy: &[f64], dz_direct: &[f64], grad: &mut RegressorParams) {
    let r = params.hidden_dim();
    let w_g = params.w_g();
    let mut dz = dz_direct.to_vec();
    let (g_wh, g_bh, g_wg, g_bg) = grad.blocks_mut();
    for (o, &d) in dy.iter().enumerate() {
        if d == 0.0 {
            continue;
        }
        g_bg[o] += d;
        let row = &w_g[o * r..(o + 1) * r];
        let g_row = &mut g_wg[o * r..(o + 1) * r];
        for j in 0..r {
            g_row[j] += d * z[j];
            dz[j] += d * row[j];
        }
    }
    let k = x.len();
    for j in 0..r {
        let pre = dz[j] * (1.0 - z[j] * z[j]);
        if pre == 0.0 {
            continue;
        }
        g_bh[j] += pre;
        for (g, v) in g_wh[j * k..(j + 1) * k].iter_mut().zip(x) {
            *g += pre * v;
        }
    }
}

fn teacher_hints(prev: Option<&RegressorParams>, batch: &[Sample]) -> Result<Option<Vec<Vec<f64>>>> {
    prev.map(|p| batch.iter().map(|s| p.represent(&s.x)).collect())
        .transpose()
}

/// Evaluates every loss term. The hint term is 0 without a previous model and
/// both memory terms are 0 for an empty memory.
pub fn loss_terms(
    params: &RegressorParams,
    prev: Option<&RegressorParams>,
    memory: &[MemoryEntry],
    batch: &[Sample],
    weights: &LossWeights,
) -> Result<LossTerms> {
    let hints = teacher_hints(prev, batch)?;
    Objective {
        batch,
        hints: hints.as_deref(),
        memory,
        sample_weights: None,
        weights: *weights,
    }
    .terms(params)
}

/// Gradient of the total loss with respect to every entry of `params`.
/// The subgradient of `|r|` at `r = 0` is taken as 0.
pub fn gradient(
    params: &RegressorParams,
    prev: Option<&RegressorParams>,
    memory: &[MemoryEntry],
    batch: &[Sample],
    weights: &LossWeights,
) -> Result<RegressorParams> {
    let hints = teacher_hints(prev, batch)?;
    Objective {
        batch,
        hints: hints.as_deref(),
        memory,
        sample_weights: None,
        weights: *weights,
    }
    .terms_and_gradient(params)
    .map(|(_, g)| g)
}
