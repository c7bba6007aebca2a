use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{seeded_rng, Matrix, Network};
use crate::error::{Error, Result};

/// One training target: a regression vector (MSE) or a class index
/// (cross-entropy).
#[derive(Debug, Clone, PartialEq)]
pub enum Target {
    Vector(Vec<f64>),
    Class(usize),
}

#[derive(Debug, Clone, Default)]
pub struct Dataset {
    pub inputs: Vec<Vec<f64>>,
    pub targets: Vec<Target>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn push(&mut self, input: Vec<f64>, target: Target) {
        self.inputs.push(input);
        self.targets.push(target);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            batch_size: 32,
            epochs: 200,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) {
            return Err(Error::InvalidConfig("learning rate must be > 0".into()));
        }
        if !(self.beta1 > 0.0 && self.beta1 < 1.0 && self.beta2 > 0.0 && self.beta2 < 1.0) {
            return Err(Error::InvalidConfig("betas must lie in (0, 1)".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidConfig("batch size must be >= 1".into()));
        }
        Ok(())
    }
}

/// Adam moments, one pair of matrices per weight matrix.
#[derive(Debug, Clone)]
pub struct TrainState {
    pub m: Vec<Matrix>,
    pub v: Vec<Matrix>,
    pub step: u64,
}

impl TrainState {
    pub fn new(net: &Network) -> Self {
        let zeros = |m: &Matrix| Matrix::zeros(m.rows, m.cols);
        TrainState {
            m: net.weights.iter().map(zeros).collect(),
            v: net.weights.iter().map(zeros).collect(),
            step: 0,
        }
    }
}

/// One Adam update with bias correction. Increments the step counter.
pub fn adam_step(net: &mut Network, state: &mut TrainState, grads: &[Matrix], cfg: &TrainConfig) -> Result<()> {
    if grads.len() != net.weights.len() {
        return Err(Error::Shape("gradient count != weight matrix count".into()));
    }
    state.step += 1;
    let t = state.step as i32;
    let bc1 = 1.0 - cfg.beta1.powi(t);
    let bc2 = 1.0 - cfg.beta2.powi(t);
    for (k, g) in grads.iter().enumerate() {
        let (m, v, w) = (&mut state.m[k], &mut state.v[k], &mut net.weights[k]);
        if g.rows != w.rows || g.cols != w.cols {
            return Err(Error::Shape(format!("gradient {k} shape mismatch")));
        }
        for i in 0..g.data.len() {
            let gi = g.data[i];
            m.data[i] = cfg.beta1 * m.data[i] + (1.0 - cfg.beta1) * gi;
            v.data[i] = cfg.beta2 * v.data[i] + (1.0 - cfg.beta2) * gi * gi;
            let mhat = m.data[i] / bc1;
            let vhat = v.data[i] / bc2;
            w.data[i] -= cfg.learning_rate * mhat / (vhat.sqrt() + cfg.epsilon);
        }
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct TrainReport {
    pub network: Network,
    /// Mean per-sample loss, one entry per epoch.
    pub loss_curve: Vec<f64>,
}

/// Mini-batch Adam training. Shuffling, init and batching are all driven by
/// `cfg.seed`; a NaN loss aborts with a diagnostic instead of continuing.
pub fn train(net: Network, data: &Dataset, cfg: &TrainConfig) -> Result<TrainReport> {
    cfg.validate()?;
    if data.is_empty() {
        return Err(Error::InvalidConfig("training dataset is empty".into()));
    }
    let mut net = net;
    let mut state = TrainState::new(&net);
    let mut rng = seeded_rng(cfg.seed);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut curve = Vec::with_capacity(cfg.epochs);

    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            let mut grads: Vec<Matrix> = net
                .weights
                .iter()
                .map(|w| Matrix::zeros(w.rows, w.cols))
                .collect();
            let inv = 1.0 / batch.len() as f64;
            for &idx in batch {
                let trace = net.forward(&data.inputs[idx])?;
                let loss = net.loss(&trace, &data.targets[idx])?;
                if !loss.is_finite() {
                    return Err(Error::Numerical(format!(
                        "loss became non-finite at epoch {epoch}, sample {idx}"
                    )));
                }
                epoch_loss += loss;
                let g = net.backward(&trace, &data.targets[idx])?;
                for (acc, gk) in grads.iter_mut().zip(&g) {
                    for (a, b) in acc.data.iter_mut().zip(&gk.data) {
                        *a += b * inv;
                    }
                }
            }
            adam_step(&mut net, &mut state, &grads, cfg)?;
        }
        curve.push(epoch_loss / data.len() as f64);
    }
    Ok(TrainReport {
        network: net,
        loss_curve: curve,
    })
}
