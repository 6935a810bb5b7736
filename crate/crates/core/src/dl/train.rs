use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::mlp::{Gradients, MlpModel, Mode};
use crate::{derive_seed, rng_from_seed, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Optimizer {
    Sgd,
    Adam { beta1: f64, beta2: f64, epsilon: f64 },
}

impl Default for Optimizer {
    fn default() -> Self {
        Optimizer::Adam {
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub optimizer: Optimizer,
    /// Fraction of samples used for fitting; the rest is held out for the
    /// per-epoch validation MSE.
    pub split_fraction: f64,
    pub seed: u64,
    pub dropout_rate: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            batch_size: 500,
            epochs: 100,
            learning_rate: 1e-3,
            optimizer: Optimizer::default(),
            split_fraction: 0.85,
            seed: 0,
            dropout_rate: 0.5,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::invalid("batch size must be >= 1"));
        }
        if !(self.split_fraction > 0.0 && self.split_fraction < 1.0) {
            return Err(Error::invalid(format!("split fraction must lie in (0, 1), got {}", self.split_fraction)));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate >= 0.0) {
            return Err(Error::invalid("learning rate must be finite and >= 0"));
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return Err(Error::invalid("dropout rate must lie in [0, 1)"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    /// Eval-mode MSE over the fitting split after the epoch.
    pub train_mse: f64,
    /// Eval-mode MSE over the held-out split, if it is non-empty.
    pub validation_mse: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainingLog {
    pub epochs: Vec<EpochStats>,
    pub train_count: usize,
    pub validation_count: usize,
}

impl TrainingLog {
    pub fn final_train_mse(&self) -> Option<f64> {
        self.epochs.last().map(|e| e.train_mse)
    }
}

const SPLIT_STREAM: u64 = 1;
const SHUFFLE_STREAM: u64 = 2;
const DROPOUT_STREAM: u64 = 3;

enum OptState {
    Sgd,
    Adam {
        beta1: f64,
        beta2: f64,
        epsilon: f64,
        step: i32,
        m: Gradients,
        v: Gradients,
    },
}

impl OptState {
    fn new(optimizer: Optimizer, model: &MlpModel) -> Self {
        match optimizer {
            Optimizer::Sgd => OptState::Sgd,
            Optimizer::Adam { beta1, beta2, epsilon } => OptState::Adam {
                beta1,
                beta2,
                epsilon,
                step: 0,
                m: model.gradient_buffers(),
                v: model.gradient_buffers(),
            },
        }
    }

    fn apply(&mut self, model: &mut MlpModel, grads: &Gradients, lr: f64) {
        let (weights, biases) = model.params_mut();
        match self {
            OptState::Sgd => {
                for (w, g) in weights.iter_mut().zip(&grads.weights) {
                    w.zip_apply(g, |p, d| *p -= lr * d);
                }
                for (b, g) in biases.iter_mut().zip(&grads.biases) {
                    b.zip_apply(g, |p, d| *p -= lr * d);
                }
            }
            OptState::Adam {
                beta1,
                beta2,
                epsilon,
                step,
                m,
                v,
            } => {
                *step += 1;
                let c1 = 1.0 - beta1.powi(*step);
                let c2 = 1.0 - beta2.powi(*step);
                let (b1, b2, eps) = (*beta1, *beta2, *epsilon);
                let update = |p: &mut [f64], g: &[f64], m: &mut [f64], v: &mut [f64]| {
                    for i in 0..p.len() {
                        m[i] = b1 * m[i] + (1.0 - b1) * g[i];
                        v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
                        p[i] -= lr * (m[i] / c1) / ((v[i] / c2).sqrt() + eps);
                    }
                };
                for q in 0..weights.len() {
                    update(
                        weights[q].as_mut_slice(),
                        grads.weights[q].as_slice(),
                        m.weights[q].as_mut_slice(),
                        v.weights[q].as_mut_slice(),
                    );
                    update(
                        biases[q].as_mut_slice(),
                        grads.biases[q].as_slice(),
                        m.biases[q].as_mut_slice(),
                        v.biases[q].as_mut_slice(),
                    );
                }
            }
        }
    }
}

fn gather(rows: &[Vec<f64>], idx: &[usize]) -> DMatrix<f64> {
    let n = rows[idx[0]].len();
    let mut m = DMatrix::zeros(n, idx.len());
    for (c, &i) in idx.iter().enumerate() {
        m.column_mut(c).copy_from_slice(&rows[i]);
    }
    m
}

/// Minimizes the MSE between network outputs and `targets` by mini-batch
/// gradient descent. The split, per-epoch shuffling and dropout masks all
/// derive from `config.seed`, and training is serial, so a seed reproduces
/// the model bit for bit.
pub fn train_on(
    mut model: MlpModel,
    inputs: &[Vec<f64>],
    targets: &[Vec<f64>],
    config: &TrainConfig,
) -> Result<(MlpModel, TrainingLog)> {
    config.validate()?;
    if inputs.is_empty() {
        return Err(Error::invalid("training set is empty"));
    }
    if inputs.len() != targets.len() {
        return Err(Error::mismatch("input/target counts", inputs.len(), targets.len()));
    }
    if let Some(bad) = inputs.iter().find(|x| x.len() != model.input_len()) {
        return Err(Error::mismatch("input length", model.input_len(), bad.len()));
    }
    if let Some(bad) = targets.iter().find(|y| y.len() != model.output_len()) {
        return Err(Error::mismatch("target length", model.output_len(), bad.len()));
    }
    model.set_dropout_rate(config.dropout_rate)?;

    let total = inputs.len();
    let mut order: Vec<usize> = (0..total).collect();
    order.shuffle(&mut rng_from_seed(derive_seed(config.seed, SPLIT_STREAM, 0)));
    let n_train = ((total as f64 * config.split_fraction).floor() as usize).clamp(1, total);
    let (train_idx, val_idx) = order.split_at(n_train);
    let mut train_idx = train_idx.to_vec();

    let train_x = gather(inputs, &train_idx);
    let train_y = gather(targets, &train_idx);
    let val = (!val_idx.is_empty()).then(|| (gather(inputs, val_idx), gather(targets, val_idx)));

    let mut shuffle_rng = rng_from_seed(derive_seed(config.seed, SHUFFLE_STREAM, 0));
    let mut dropout_rng = rng_from_seed(derive_seed(config.seed, DROPOUT_STREAM, 0));
    let mut opt = OptState::new(config.optimizer, &model);
    let mut log = TrainingLog {
        epochs: Vec::with_capacity(config.epochs),
        train_count: n_train,
        validation_count: val_idx.len(),
    };

    for epoch in 0..config.epochs {
        train_idx.shuffle(&mut shuffle_rng);
        for (batch, chunk) in train_idx.chunks(config.batch_size).enumerate() {
            let x = gather(inputs, chunk);
            let y = gather(targets, chunk);
            let (loss, grads) = model.loss_and_gradients(&x, &y, Mode::Train(&mut dropout_rng))?;
            if !loss.is_finite() {
                return Err(Error::Divergence { epoch, batch });
            }
            opt.apply(&mut model, &grads, config.learning_rate);
        }
        let train_mse = model.mse(&train_x, &train_y)?;
        if !train_mse.is_finite() {
            return Err(Error::Divergence { epoch, batch: usize::MAX });
        }
        let validation_mse = match &val {
            Some((vx, vy)) => Some(model.mse(vx, vy)?),
            None => None,
        };
        log::debug!("epoch {epoch}: train mse {train_mse:.6e}, validation mse {validation_mse:?}");
        log.epochs.push(EpochStats {
            epoch,
            train_mse,
            validation_mse,
        });
    }
    Ok((model, log))
}
