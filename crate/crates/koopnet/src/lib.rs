//! koopnet learns coordinate transformations in which nonlinear PDE dynamics
//! become linear. It bundles spectral reference solvers for the heat,
//! Burgers, and Kuramoto-Sivashinsky equations, a small dense neural-network
//! engine with reverse-mode gradients, the residual Koopman autoencoder and
//! its five-term training objective, and post-training diagnostics (spectrum,
//! eigenfunctions, prediction error, Cole-Hopf comparison).

pub mod error;
pub mod analysis;
pub mod cli;
pub mod config;
pub mod koopman;
pub mod nn;
pub mod numerics;
pub mod pde;
pub mod util;

pub use error::{Error, Result};
