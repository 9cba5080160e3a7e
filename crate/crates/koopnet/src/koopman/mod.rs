//! The residual Koopman autoencoder: model, objective, training.

pub mod loss;
pub mod model;
pub mod train;

pub use loss::{compute_losses, compute_losses_with_grads, LossReport, LossWeights};
pub use model::{KConstraint, KMatrix, KoopmanModel, Linear, ModelArch, OuterKind};
pub use train::{evaluate, train, EpochMetrics, TrainConfig, TrainOutcome};
