//! Minimal dense/convolutional network engine with reverse-mode gradients
//! and Adam. Covers exactly the layer inventory the Koopman architectures
//! need; no GPU, no dynamic graphs.

pub mod adam;
pub mod checkpoint;
pub mod demo;
pub mod gradcheck;
pub mod layers;
pub mod network;
pub mod tensor;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use demo::{demo_identity, IdentityTrial};
pub use layers::{Activation, Feat, Layer, LayerSpec};
pub use network::{ForwardCache, Network};
pub use tensor::Tensor;
