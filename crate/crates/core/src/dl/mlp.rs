use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::{Error, Result, SimRng};

/// Forward-pass mode.
pub enum Mode<'a> {
    /// Dropout active, masks drawn from the rng.
    Train(&'a mut SimRng),
    /// No dropout and no rescaling.
    Eval,
}

/// Fully connected network: affine, ReLU, dropout for every hidden layer,
/// then a final affine output layer.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    layer_sizes: Vec<usize>,
    /// `weights[q]` is `layer_sizes[q + 1] x layer_sizes[q]`.
    weights: Vec<DMatrix<f64>>,
    biases: Vec<DVector<f64>>,
    dropout_rate: f64,
}

/// Parameter-shaped gradient (or optimizer moment) buffers.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub weights: Vec<DMatrix<f64>>,
    pub biases: Vec<DVector<f64>>,
}

impl Gradients {
    fn zeros_like(model: &MlpModel) -> Self {
        Self {
            weights: model.weights.iter().map(|w| DMatrix::zeros(w.nrows(), w.ncols())).collect(),
            biases: model.biases.iter().map(|b| DVector::zeros(b.len())).collect(),
        }
    }

    /// Same flat order as [`MlpModel::parameter`].
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for (w, b) in self.weights.iter().zip(&self.biases) {
            out.extend(w.transpose().iter());
            out.extend(b.iter());
        }
        out
    }
}

fn validate_shape(layer_sizes: &[usize], dropout_rate: f64) -> Result<()> {
    if layer_sizes.len() < 2 || layer_sizes.contains(&0) {
        return Err(Error::invalid(format!("bad layer sizes {layer_sizes:?}")));
    }
    if !(0.0..1.0).contains(&dropout_rate) {
        return Err(Error::invalid(format!("dropout rate must lie in [0, 1), got {dropout_rate}")));
    }
    Ok(())
}

impl MlpModel {
    /// Random initialization: `N(0, 2 / fan_in)` (He) for the ReLU layers,
    /// `N(0, 1 / fan_in)` for the linear output layer, zero biases.
    pub fn new(layer_sizes: &[usize], dropout_rate: f64, rng: &mut SimRng) -> Result<Self> {
        validate_shape(layer_sizes, dropout_rate)?;
        let last = layer_sizes.len() - 2;
        let mut weights = Vec::new();
        let mut biases = Vec::new();
        for (q, pair) in layer_sizes.windows(2).enumerate() {
            let (fan_in, fan_out) = (pair[0], pair[1]);
            let gain = if q == last { 1.0 } else { 2.0 };
            let std = (gain / fan_in as f64).sqrt();
            weights.push(DMatrix::from_fn(fan_out, fan_in, |_, _| {
                std * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng)
            }));
            biases.push(DVector::zeros(fan_out));
        }
        Ok(Self {
            layer_sizes: layer_sizes.to_vec(),
            weights,
            biases,
            dropout_rate,
        })
    }

    /// All-zero parameters.
    pub fn zeros(layer_sizes: &[usize], dropout_rate: f64) -> Result<Self> {
        validate_shape(layer_sizes, dropout_rate)?;
        let weights = layer_sizes.windows(2).map(|p| DMatrix::zeros(p[1], p[0])).collect();
        let biases = layer_sizes[1..].iter().map(|&n| DVector::zeros(n)).collect();
        Ok(Self {
            layer_sizes: layer_sizes.to_vec(),
            weights,
            biases,
            dropout_rate,
        })
    }

    /// Builds a model from explicit parameters, checking every shape.
    pub fn from_parameters(
        weights: Vec<DMatrix<f64>>,
        biases: Vec<DVector<f64>>,
        dropout_rate: f64,
    ) -> Result<Self> {
        if weights.is_empty() || weights.len() != biases.len() {
            return Err(Error::invalid("need one bias per weight matrix"));
        }
        let mut sizes = vec![weights[0].ncols()];
        for (q, (w, b)) in weights.iter().zip(&biases).enumerate() {
            if w.ncols() != *sizes.last().unwrap() || b.len() != w.nrows() {
                return Err(Error::mismatch("layer shapes", format!("layer {q} consistent"), format!("{:?} / {}", w.shape(), b.len())));
            }
            sizes.push(w.nrows());
        }
        validate_shape(&sizes, dropout_rate)?;
        Ok(Self {
            layer_sizes: sizes,
            weights,
            biases,
            dropout_rate,
        })
    }

    pub fn layer_sizes(&self) -> &[usize] {
        &self.layer_sizes
    }

    pub fn input_len(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn output_len(&self) -> usize {
        *self.layer_sizes.last().unwrap()
    }

    pub fn dropout_rate(&self) -> f64 {
        self.dropout_rate
    }

    pub fn set_dropout_rate(&mut self, rate: f64) -> Result<()> {
        validate_shape(&self.layer_sizes, rate)?;
        self.dropout_rate = rate;
        Ok(())
    }

    pub fn weights(&self) -> &[DMatrix<f64>] {
        &self.weights
    }

    pub fn biases(&self) -> &[DVector<f64>] {
        &self.biases
    }

    pub fn parameter_count(&self) -> usize {
        self.weights.iter().map(|w| w.len()).sum::<usize>() + self.biases.iter().map(|b| b.len()).sum::<usize>()
    }

    /// Flat parameter access: per layer, weights row-major then biases.
    pub fn parameter(&self, index: usize) -> f64 {
        *self.locate(index)
    }

    pub fn set_parameter(&mut self, index: usize, value: f64) {
        *self.locate_mut(index) = value;
    }

    fn locate(&self, mut index: usize) -> &f64 {
        for (w, b) in self.weights.iter().zip(&self.biases) {
            if index < w.len() {
                return &w[(index / w.ncols(), index % w.ncols())];
            }
            index -= w.len();
            if index < b.len() {
                return &b[index];
            }
            index -= b.len();
        }
        panic!("parameter index out of range");
    }

    fn locate_mut(&mut self, mut index: usize) -> &mut f64 {
        for (w, b) in self.weights.iter_mut().zip(self.biases.iter_mut()) {
            if index < w.len() {
                let cols = w.ncols();
                return &mut w[(index / cols, index % cols)];
            }
            index -= w.len();
            if index < b.len() {
                return &mut b[index];
            }
            index -= b.len();
        }
        panic!("parameter index out of range");
    }

    /// Forward pass of a single input vector.
    pub fn forward(&self, x: &[f64], mode: Mode<'_>) -> Result<Vec<f64>> {
        if x.len() != self.input_len() {
            return Err(Error::mismatch("network input", self.input_len(), x.len()));
        }
        let batch = DMatrix::from_column_slice(x.len(), 1, x);
        let out = self.forward_batch(&batch, mode)?;
        Ok(out.as_slice().to_vec())
    }

    /// Forward pass of a batch stored column-wise (`input_len x B`).
    pub fn forward_batch(&self, inputs: &DMatrix<f64>, mode: Mode<'_>) -> Result<DMatrix<f64>> {
        if inputs.nrows() != self.input_len() {
            return Err(Error::mismatch("network input", self.input_len(), inputs.nrows()));
        }
        Ok(self.run(inputs, mode, false).output)
    }

    fn run(&self, inputs: &DMatrix<f64>, mut mode: Mode<'_>, keep: bool) -> Trace {
        let layers = self.weights.len();
        let mut trace = Trace {
            activations: Vec::with_capacity(layers),
            masks: Vec::with_capacity(layers),
            output: DMatrix::zeros(0, 0),
        };
        let mut a = inputs.clone();
        for q in 0..layers {
            let mut z = &self.weights[q] * &a;
            for mut col in z.column_iter_mut() {
                col += &self.biases[q];
            }
            if keep {
                trace.activations.push(a);
            }
            if q + 1 == layers {
                trace.output = z;
                break;
            }
            z.apply(|v| *v = v.max(0.0));
            let mask = match (&mut mode, self.dropout_rate > 0.0) {
                (Mode::Train(rng), true) => {
                    let keep_p = 1.0 - self.dropout_rate;
                    let m = DMatrix::from_fn(z.nrows(), z.ncols(), |_, _| {
                        if rng.random::<f64>() < keep_p {
                            1.0 / keep_p
                        } else {
                            0.0
                        }
                    });
                    z.component_mul_assign(&m);
                    Some(m)
                }
                _ => None,
            };
            if keep {
                trace.masks.push(mask);
            }
            a = z;
        }
        trace
    }

    /// Mean squared error over all outputs of a batch, and its gradient with
    /// respect to every parameter.
    pub fn loss_and_gradients(
        &self,
        inputs: &DMatrix<f64>,
        targets: &DMatrix<f64>,
        mode: Mode<'_>,
    ) -> Result<(f64, Gradients)> {
        if inputs.nrows() != self.input_len() || targets.nrows() != self.output_len() || inputs.ncols() != targets.ncols() {
            return Err(Error::mismatch(
                "training batch",
                format!("{} x B / {} x B", self.input_len(), self.output_len()),
                format!("{:?} / {:?}", inputs.shape(), targets.shape()),
            ));
        }
        let trace = self.run(inputs, mode, true);
        let diff = &trace.output - targets;
        let count = diff.len() as f64;
        let loss = diff.norm_squared() / count;

        let mut grads = Gradients::zeros_like(self);
        let mut delta = diff * (2.0 / count);
        for q in (0..self.weights.len()).rev() {
            let a = &trace.activations[q];
            grads.weights[q] = &delta * a.transpose();
            grads.biases[q] = delta.column_sum();
            if q == 0 {
                break;
            }
            let mut back = self.weights[q].tr_mul(&delta);
            // a = dropout(relu(z)): a > 0 exactly where relu was active and kept
            if let Some(mask) = &trace.masks[q - 1] {
                back.component_mul_assign(mask);
            }
            back.zip_apply(a, |g, act| {
                if act <= 0.0 {
                    *g = 0.0
                }
            });
            delta = back;
        }
        Ok((loss, grads))
    }

    /// Mean squared error in eval mode.
    pub fn mse(&self, inputs: &DMatrix<f64>, targets: &DMatrix<f64>) -> Result<f64> {
        let out = self.forward_batch(inputs, Mode::Eval)?;
        if out.shape() != targets.shape() {
            return Err(Error::mismatch("targets", format!("{:?}", out.shape()), format!("{:?}", targets.shape())));
        }
        Ok((out - targets).norm_squared() / targets.len() as f64)
    }

    pub(crate) fn params_mut(&mut self) -> (&mut [DMatrix<f64>], &mut [DVector<f64>]) {
        (&mut self.weights, &mut self.biases)
    }

    pub(crate) fn gradient_buffers(&self) -> Gradients {
        Gradients::zeros_like(self)
    }
}

struct Trace {
    /// Input to each affine layer.
    activations: Vec<DMatrix<f64>>,
    /// Scaled dropout mask applied after each hidden ReLU.
    masks: Vec<Option<DMatrix<f64>>>,
    output: DMatrix<f64>,
}
