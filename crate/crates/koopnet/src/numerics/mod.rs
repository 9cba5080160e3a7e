//! Foundational numerical kernels: real FFT, dense nonsymmetric eigen
//! solver, stratified sampling, small matrices, and the seedable
//! counter-based generator every stochastic path draws from.
//!
//! All operations here are pure given their inputs; RNG state is always an
//! explicit argument.

pub mod eigen;
pub mod fft;
pub mod grid;
pub mod matrix;
pub mod rng;
pub mod sampling;

pub use eigen::{eig_dense, eig_values, EigenPairs};
pub use fft::{irfft, rfft, rfft_on, FftPlan, Spectrum};
pub use grid::Grid1D;
pub use matrix::{matpow, Mat};
pub use rng::CounterRng;
pub use sampling::{latin_hypercube, truncated_geometric};
