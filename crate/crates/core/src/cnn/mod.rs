//! Convolutional network engine: tensors, layer kernels, model, training and checkpoints.

pub mod checkpoint;
pub mod gradcheck;
pub mod layers;
pub mod network;
pub mod tensor;
pub mod train;

pub use layers::Padding;
pub use network::{argmax, init, init_with, Gradients, InitScheme, LayerSpec, ModelState, NetworkSpec, Profile};
pub use tensor::Tensor;
pub use train::{
    epochs_to_threshold, evaluate, sgd_step, train, train_from, EpochMetrics, Evaluation, Example, StopReason,
    TrainConfig, TrainReport,
};
