//! Learned beam prediction.
//!
//! Learning phase: collect `<noisy sampled descriptor, full rate vector>`
//! pairs over many coherence blocks, normalize them, and fit an MLP by MSE
//! regression. Prediction phase: feed a fresh descriptor through the network
//! and take the argmax, optionally refining over the top `k_B` candidates.

mod dataset;
pub mod io;
mod mlp;
mod predict;
mod train;

pub use dataset::{
    block_seed, build_input, collect_dataset, collect_raw, compute_delta, noisy_samples, normalize_targets, Dataset,
    DatasetSample, RawSample, TargetStatus,
};
pub use mlp::{Gradients, MlpModel, Mode};
pub use predict::{
    default_layer_sizes, predict_beam, top_k_indices, top_k_refine, train, BeamPredictor, Prediction,
};
pub use train::{train_on, EpochStats, Optimizer, TrainConfig, TrainingLog};
