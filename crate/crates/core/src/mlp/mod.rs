//! Fully-connected network with manual backpropagation and Adam.
//!
//! Conventions, fixed across every experiment in this crate:
//! - biases do not exist (they are structurally zero),
//! - every hidden layer applies `x -> tanh(gain * x)`,
//! - the final layer is either another tanh layer (for MSE regression
//!   targets) or a linear map followed by softmax (for cross-entropy).
//!
//! All arithmetic is `f64` and single-threaded; identical `(config, seed,
//! dataset)` triples produce bitwise-identical trained weights.

mod train;

pub use train::{adam_step, train, Dataset, Target, TrainConfig, TrainReport, TrainState};

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub(crate) fn seeded_rng(seed: u64) -> ChaCha12Rng {
    ChaCha12Rng::seed_from_u64(seed)
}

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Self {
        let r = rows.len();
        let c = if r == 0 { 0 } else { rows[0].len() };
        let mut data = Vec::with_capacity(r * c);
        for row in &rows {
            assert_eq!(row.len(), c, "ragged rows");
            data.extend_from_slice(row);
        }
        Matrix {
            rows: r,
            cols: c,
            data,
        }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// `y = A x`.
    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.cols);
        debug_assert_eq!(y.len(), self.rows);
        for (i, yi) in y.iter_mut().enumerate() {
            let row = self.row(i);
            let mut acc = 0.0;
            for (w, xv) in row.iter().zip(x) {
                acc += w * xv;
            }
            *yi = acc;
        }
    }

    /// `y = A^T x`.
    pub fn matvec_t(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.rows);
        debug_assert_eq!(y.len(), self.cols);
        y.fill(0.0);
        for (i, &xi) in x.iter().enumerate() {
            if xi == 0.0 {
                continue;
            }
            let row = self.row(i);
            for (yj, w) in y.iter_mut().zip(row) {
                *yj += w * xi;
            }
        }
    }

    /// `self += scale * (d ⊗ a)`.
    pub fn add_outer(&mut self, d: &[f64], a: &[f64], scale: f64) {
        debug_assert_eq!(d.len(), self.rows);
        debug_assert_eq!(a.len(), self.cols);
        for (i, &di) in d.iter().enumerate() {
            let s = di * scale;
            if s == 0.0 {
                continue;
            }
            let row = &mut self.data[i * self.cols..(i + 1) * self.cols];
            for (w, &av) in row.iter_mut().zip(a) {
                *w += s * av;
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FinalLayerMode {
    /// Last layer behaves like a hidden layer: `tanh(gain * Wx)`.
    TanhAsHidden,
    /// Last layer is linear; the output is `softmax(Wx)` with the raw
    /// logits kept alongside.
    LinearSoftmax,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LossKind {
    Mse,
    CrossEntropy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkConfig {
    /// Cell counts per layer, input first (e.g. `[55, 50, 25, 4]`).
    pub layer_sizes: Vec<usize>,
    /// The constant in `tanh(gain * x)`.
    pub activation_gain: f64,
    pub final_layer_mode: FinalLayerMode,
    pub loss: LossKind,
}

impl NetworkConfig {
    pub fn validate(&self) -> Result<()> {
        if self.layer_sizes.len() < 2 {
            return Err(Error::InvalidConfig("need at least 2 layers".into()));
        }
        if self.layer_sizes.iter().any(|&n| n == 0) {
            return Err(Error::InvalidConfig("all layer sizes must be >= 1".into()));
        }
        if !(self.activation_gain > 0.0) {
            return Err(Error::InvalidConfig("activation gain must be > 0".into()));
        }
        if self.loss == LossKind::CrossEntropy && self.final_layer_mode != FinalLayerMode::LinearSoftmax {
            return Err(Error::InvalidConfig(
                "cross-entropy requires a linear+softmax final layer".into(),
            ));
        }
        Ok(())
    }

    pub fn n_layers(&self) -> usize {
        self.layer_sizes.len()
    }

    pub fn output_size(&self) -> usize {
        *self.layer_sizes.last().unwrap()
    }
}

/// The trainable object: weight matrices only, no biases.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    pub config: NetworkConfig,
    /// `weights[k]` has shape `(layer_sizes[k+1], layer_sizes[k])`.
    pub weights: Vec<Matrix>,
}

impl Network {
    /// Seeded init, uniform in `[-1/sqrt(fan_in), +1/sqrt(fan_in)]`.
    pub fn random(config: NetworkConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = seeded_rng(seed);
        let mut weights = Vec::new();
        for k in 0..config.layer_sizes.len() - 1 {
            let (rows, cols) = (config.layer_sizes[k + 1], config.layer_sizes[k]);
            let limit = 1.0 / (cols as f64).sqrt();
            let mut m = Matrix::zeros(rows, cols);
            for w in &mut m.data {
                *w = rng.gen_range(-limit..limit);
            }
            weights.push(m);
        }
        Ok(Network { config, weights })
    }

    pub fn from_weights(config: NetworkConfig, weights: Vec<Matrix>) -> Result<Self> {
        config.validate()?;
        if weights.len() != config.layer_sizes.len() - 1 {
            return Err(Error::Shape(format!(
                "expected {} weight matrices, got {}",
                config.layer_sizes.len() - 1,
                weights.len()
            )));
        }
        for (k, m) in weights.iter().enumerate() {
            if m.rows != config.layer_sizes[k + 1] || m.cols != config.layer_sizes[k] {
                return Err(Error::Shape(format!(
                    "layer {}: expected {}x{}, got {}x{}",
                    k,
                    config.layer_sizes[k + 1],
                    config.layer_sizes[k],
                    m.rows,
                    m.cols
                )));
            }
            if m.data.iter().any(|w| !w.is_finite()) {
                return Err(Error::Numerical(format!("layer {k}: non-finite weight")));
            }
        }
        Ok(Network { config, weights })
    }

    pub fn input_size(&self) -> usize {
        self.config.layer_sizes[0]
    }

    /// Index of the last hidden layer in a [`ForwardTrace`].
    pub fn last_hidden_layer(&self) -> usize {
        self.config.layer_sizes.len() - 2
    }

    /// Feed-forward pass keeping every per-layer activation vector.
    pub fn forward(&self, input: &[f64]) -> Result<ForwardTrace> {
        if input.len() != self.input_size() {
            return Err(Error::Shape(format!(
                "input has {} components, network expects {}",
                input.len(),
                self.input_size()
            )));
        }
        let gain = self.config.activation_gain;
        let n = self.weights.len();
        let mut activations = Vec::with_capacity(n + 1);
        activations.push(input.to_vec());
        let mut logits = None;
        for (k, w) in self.weights.iter().enumerate() {
            let mut pre = vec![0.0; w.rows];
            w.matvec(&activations[k], &mut pre);
            let last = k + 1 == n;
            let act = if last && self.config.final_layer_mode == FinalLayerMode::LinearSoftmax {
                let probs = softmax(&pre);
                logits = Some(pre);
                probs
            } else {
                pre.iter().map(|&x| (gain * x).tanh()).collect()
            };
            activations.push(act);
        }
        Ok(ForwardTrace { activations, logits })
    }

    /// Gradient of the configured loss w.r.t. every weight matrix.
    ///
    /// `trace` must come from [`Network::forward`] on this network.
    pub fn backward(&self, trace: &ForwardTrace, target: &Target) -> Result<Vec<Matrix>> {
        let gain = self.config.activation_gain;
        let n = self.weights.len();
        let output = trace.output();

        // Delta at the final pre-activation.
        let mut delta: Vec<f64> = match (self.config.loss, target) {
            (LossKind::Mse, Target::Vector(t)) => {
                if t.len() != output.len() {
                    return Err(Error::Shape("target length != output length".into()));
                }
                let dl: Vec<f64> = output.iter().zip(t).map(|(&o, &tv)| 2.0 * (o - tv)).collect();
                match self.config.final_layer_mode {
                    FinalLayerMode::TanhAsHidden => dl
                        .iter()
                        .zip(output)
                        .map(|(&g, &a)| g * gain * (1.0 - a * a))
                        .collect(),
                    FinalLayerMode::LinearSoftmax => softmax_vjp(output, &dl),
                }
            }
            (LossKind::CrossEntropy, Target::Class(c)) => {
                if *c >= output.len() {
                    return Err(Error::Shape("class index out of range".into()));
                }
                if self.config.final_layer_mode != FinalLayerMode::LinearSoftmax {
                    return Err(Error::InvalidConfig(
                        "cross-entropy requires a linear+softmax final layer".into(),
                    ));
                }
                output
                    .iter()
                    .enumerate()
                    .map(|(i, &p)| p - if i == *c { 1.0 } else { 0.0 })
                    .collect()
            }
            _ => {
                return Err(Error::InvalidConfig(
                    "target kind does not match the configured loss".into(),
                ))
            }
        };

        let mut grads: Vec<Matrix> = self
            .weights
            .iter()
            .map(|w| Matrix::zeros(w.rows, w.cols))
            .collect();
        for k in (0..n).rev() {
            grads[k].add_outer(&delta, &trace.activations[k], 1.0);
            if k > 0 {
                let mut up = vec![0.0; self.weights[k].cols];
                self.weights[k].matvec_t(&delta, &mut up);
                delta = up
                    .iter()
                    .zip(&trace.activations[k])
                    .map(|(&u, &a)| u * gain * (1.0 - a * a))
                    .collect();
            }
        }
        Ok(grads)
    }

    /// Loss of a forward trace against a target, per the configured loss.
    pub fn loss(&self, trace: &ForwardTrace, target: &Target) -> Result<f64> {
        match (self.config.loss, target) {
            (LossKind::Mse, Target::Vector(t)) => mse(trace.output(), t),
            (LossKind::CrossEntropy, Target::Class(c)) => Ok(cross_entropy(trace.output(), *c)?.0),
            _ => Err(Error::InvalidConfig(
                "target kind does not match the configured loss".into(),
            )),
        }
    }
}

/// Per-layer activations of one forward pass. `activations[0]` is the input;
/// with a linear+softmax head the last entry holds the probabilities and
/// `logits` the raw final pre-activations.
#[derive(Debug, Clone)]
pub struct ForwardTrace {
    pub activations: Vec<Vec<f64>>,
    pub logits: Option<Vec<f64>>,
}

impl ForwardTrace {
    pub fn output(&self) -> &[f64] {
        self.activations.last().unwrap()
    }

    pub fn hidden(&self, layer: usize) -> &[f64] {
        &self.activations[layer]
    }
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&x| (x - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.iter().map(|&e| e / sum).collect()
}

/// Pulls a gradient on softmax outputs back to the logits.
fn softmax_vjp(probs: &[f64], grad_out: &[f64]) -> Vec<f64> {
    let dot: f64 = probs.iter().zip(grad_out).map(|(&p, &g)| p * g).sum();
    probs
        .iter()
        .zip(grad_out)
        .map(|(&p, &g)| p * (g - dot))
        .collect()
}

/// Sum of squared coordinate differences (no averaging).
pub fn mse(output: &[f64], target: &[f64]) -> Result<f64> {
    if output.len() != target.len() {
        return Err(Error::Shape(format!(
            "mse: lengths differ ({} vs {})",
            output.len(),
            target.len()
        )));
    }
    Ok(output
        .iter()
        .zip(target)
        .map(|(&o, &t)| (o - t) * (o - t))
        .sum())
}

/// Floor applied to a probability before `-log`.
pub const CE_PROB_FLOOR: f64 = 1e-12;

/// `-log p[class]`. Returns the loss and whether the probability had to be
/// clamped at [`CE_PROB_FLOOR`].
pub fn cross_entropy(probs: &[f64], class: usize) -> Result<(f64, bool)> {
    if class >= probs.len() {
        return Err(Error::Shape("class index out of range".into()));
    }
    if probs.iter().any(|&p| p < 0.0) {
        return Err(Error::Numerical("negative probability".into()));
    }
    let sum: f64 = probs.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(Error::Numerical(format!("probabilities sum to {sum}")));
    }
    let p = probs[class];
    let clamped = p < CE_PROB_FLOOR;
    Ok(((-p.max(CE_PROB_FLOOR).ln()), clamped))
}

/// Serializable weight dump with stable key order.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WeightDump {
    pub config: NetworkConfig,
    pub seed: u64,
    pub loss_curve: Vec<f64>,
    pub layers: Vec<LayerDump>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LayerDump {
    pub rows: usize,
    pub cols: usize,
    /// Row-major entries.
    pub data: Vec<f64>,
}

impl WeightDump {
    pub fn new(net: &Network, seed: u64, loss_curve: Vec<f64>) -> Self {
        WeightDump {
            config: net.config.clone(),
            seed,
            loss_curve,
            layers: net
                .weights
                .iter()
                .map(|m| LayerDump {
                    rows: m.rows,
                    cols: m.cols,
                    data: m.data.clone(),
                })
                .collect(),
        }
    }

    pub fn to_network(&self) -> Result<Network> {
        let weights = self
            .layers
            .iter()
            .map(|l| {
                if l.data.len() != l.rows * l.cols {
                    return Err(Error::Shape("layer data length != rows*cols".into()));
                }
                Ok(Matrix {
                    rows: l.rows,
                    cols: l.cols,
                    data: l.data.clone(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Network::from_weights(self.config.clone(), weights)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("weight dump serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

#[cfg(test)]
mod tests;
