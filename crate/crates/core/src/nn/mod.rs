//! Dense/convolutional network representation, inference and training.

pub mod arch;
pub mod layer;
pub mod network;
pub mod ops;
pub mod train;

pub use arch::{ArchToken, Architecture, BranchArch};
pub use layer::{Layer, LayerKind};
pub use network::{layer_macs, LayerPos, NetworkSpec};
pub use ops::{apply_layer, conv2d_via_vmm, im2col, max_pool, relu, softmax};
pub use train::{
    accuracy, cross_entropy, grad_check, loss_and_gradients, train_sgd, GradCheckReport,
    Gradients, LabeledSet, TrainConfig, TrainLog,
};
