use super::dataset::{build_input, Dataset};
use super::mlp::{MlpModel, Mode};
use super::train::{train_on, TrainConfig, TrainingLog};
use crate::rate::BeamChoice;
use crate::surface::ActiveSet;
use crate::{argmax, rng_from_seed, Complex64, Error, Result};

/// Default layer sizes `[2 M_bar K_DL, M, 4M, 4M, M]`; the output size is the
/// codebook size, which equals `M` for the DFT codebook.
pub fn default_layer_sizes(active_count: usize, k_dl: usize, num_codewords: usize) -> Vec<usize> {
    let m = num_codewords;
    vec![2 * active_count * k_dl, m, 4 * m, 4 * m, m]
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    /// Network output, on the normalized-target scale.
    pub rates: Vec<f64>,
    /// Argmax of `rates`, lowest index on ties.
    pub index: usize,
}

/// Eval-mode forward pass on the scaled descriptor.
pub fn predict_beam(model: &MlpModel, descriptor: &[Complex64], delta: f64) -> Result<Prediction> {
    let x = build_input(descriptor, delta)?;
    let rates = model.forward(&x, Mode::Eval)?;
    let index = argmax(&rates).ok_or_else(|| Error::invalid("model produced no finite output"))?;
    Ok(Prediction { rates, index })
}

/// Indices of the `k` largest predictions, best first; equal predictions keep
/// the lower index first.
pub fn top_k_indices(predicted: &[f64], k: usize) -> Result<Vec<usize>> {
    if k == 0 || k > predicted.len() {
        return Err(Error::invalid(format!("k_B must lie in [1, {}], got {k}", predicted.len())));
    }
    let mut order: Vec<usize> = (0..predicted.len()).collect();
    order.sort_by(|&a, &b| predicted[b].total_cmp(&predicted[a]));
    order.truncate(k);
    Ok(order)
}

/// Evaluates the true rate of the `k` most promising beams with `oracle`
/// (standing in for over-the-air beam training) and keeps the best.
pub fn top_k_refine(predicted: &[f64], k: usize, mut oracle: impl FnMut(usize) -> Result<f64>) -> Result<BeamChoice> {
    let mut best: Option<BeamChoice> = None;
    for index in top_k_indices(predicted, k)? {
        let rate = oracle(index)?;
        let better = match best {
            None => true,
            Some(b) => rate > b.rate || (rate == b.rate && index < b.index),
        };
        if better {
            best = Some(BeamChoice { index, rate });
        }
    }
    Ok(best.expect("k >= 1"))
}

/// A trained network together with everything needed to feed it: the frozen
/// input scale and the sensor layout it was trained on.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamPredictor {
    pub model: MlpModel,
    pub delta: f64,
    pub active: ActiveSet,
    pub k_dl: usize,
    pub seed: u64,
}

impl BeamPredictor {
    pub fn predict(&self, descriptor: &[Complex64]) -> Result<Prediction> {
        predict_beam(&self.model, descriptor, self.delta)
    }
}

/// Initializes a network with `layer_sizes` (or the defaults) from
/// `config.seed` and fits it to `dataset`.
pub fn train(dataset: &Dataset, layer_sizes: Option<&[usize]>, config: &TrainConfig) -> Result<(BeamPredictor, TrainingLog)> {
    let sizes = match layer_sizes {
        Some(s) => s.to_vec(),
        None => default_layer_sizes(dataset.active.len(), dataset.k_dl, dataset.num_codewords),
    };
    if sizes.first() != Some(&dataset.input_len()) {
        return Err(Error::mismatch("network input size", dataset.input_len(), format!("{:?}", sizes.first())));
    }
    if sizes.last() != Some(&dataset.num_codewords) {
        return Err(Error::mismatch("network output size", dataset.num_codewords, format!("{:?}", sizes.last())));
    }
    let model = MlpModel::new(&sizes, config.dropout_rate, &mut rng_from_seed(config.seed))?;
    let (model, log) = train_on(model, &dataset.inputs(), &dataset.targets(), config)?;
    Ok((
        BeamPredictor {
            model,
            delta: dataset.delta,
            active: dataset.active.clone(),
            k_dl: dataset.k_dl,
            seed: config.seed,
        },
        log,
    ))
}
