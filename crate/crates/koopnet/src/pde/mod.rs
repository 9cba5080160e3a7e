//! PDE ground truth: trajectory generation for the heat, Burgers, and
//! Kuramoto-Sivashinsky equations with the paper-family initial conditions.

pub mod dataset;
pub mod etdrk4;
pub mod ic;
pub mod solve;

use crate::error::{Error, Result};
use crate::numerics::grid::Grid1D;

pub use dataset::{generate_dataset, Dataset, GenerateOptions, Mix};
pub use ic::{sample_ic, IcClass, IcRanges, InitialCondition};
pub use solve::{
    burgers_solve_colehopf, burgers_solve_numeric, colehopf_transform, heat_solve, ks_solve,
    solve_sampled,
};

/// Which equation generated the data. Domains are fixed per equation:
/// heat and Burgers live on (-pi, pi), KS on (-4 pi, 4 pi).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PdeKind {
    Heat,
    Burgers { epsilon: f64, mu: f64 },
    Ks,
}

impl PdeKind {
    pub fn domain(&self) -> (f64, f64) {
        match self {
            PdeKind::Heat | PdeKind::Burgers { .. } => (-std::f64::consts::PI, std::f64::consts::PI),
            PdeKind::Ks => (-4.0 * std::f64::consts::PI, 4.0 * std::f64::consts::PI),
        }
    }

    pub fn grid(&self, n: usize) -> Result<Grid1D> {
        let (a, b) = self.domain();
        Grid1D::new(n, a, b)
    }

    pub fn validate(&self) -> Result<()> {
        if let PdeKind::Burgers { mu, .. } = self {
            if !(*mu > 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "Burgers diffusion strength must be positive, got {mu}"
                )));
            }
        }
        Ok(())
    }

    /// On-disk u32 tag in KPD1 files.
    pub fn tag(&self) -> u32 {
        match self {
            PdeKind::Heat => 0,
            PdeKind::Burgers { .. } => 1,
            PdeKind::Ks => 2,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            PdeKind::Heat => "heat",
            PdeKind::Burgers { .. } => "burgers",
            PdeKind::Ks => "ks",
        }
    }

    /// Default internal solver step for a snapshot spacing `dt`.
    pub fn default_substeps(&self) -> usize {
        match self {
            PdeKind::Heat => 1,
            PdeKind::Burgers { .. } => 10,
            PdeKind::Ks => 50,
        }
    }
}

/// A spatially discretized solution: T states of length n at spacing dt.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    grid: Grid1D,
    dt: f64,
    t_len: usize,
    states: Vec<f64>, // row-major T x n, row t is u at time t*dt
}

impl Trajectory {
    pub fn new(grid: Grid1D, dt: f64, t_len: usize, states: Vec<f64>) -> Result<Self> {
        if t_len < 2 {
            return Err(Error::InvalidArgument(format!(
                "trajectory needs at least 2 states, got {t_len}"
            )));
        }
        if states.len() != t_len * grid.n() {
            return Err(Error::Shape(format!(
                "trajectory data length {} does not fill {t_len} x {}",
                states.len(),
                grid.n()
            )));
        }
        if states.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("trajectory state".into()));
        }
        Ok(Trajectory {
            grid,
            dt,
            t_len,
            states,
        })
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn t_len(&self) -> usize {
        self.t_len
    }

    pub fn n(&self) -> usize {
        self.grid.n()
    }

    pub fn state(&self, t: usize) -> &[f64] {
        &self.states[t * self.grid.n()..(t + 1) * self.grid.n()]
    }

    pub fn states(&self) -> &[f64] {
        &self.states
    }
}
