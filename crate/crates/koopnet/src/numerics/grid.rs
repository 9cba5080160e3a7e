//! Periodic 1-D grid.

use crate::error::{Error, Result};
use crate::numerics::fft::{self, FftPlan, Spectrum};

/// Equispaced periodic grid on [a, b) with n points, n a power of two.
/// Points are x_j = a + j dx with dx = (b - a) / n; b itself is excluded.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid1D {
    n: usize,
    a: f64,
    b: f64,
}

impl Grid1D {
    pub fn new(n: usize, a: f64, b: f64) -> Result<Self> {
        if n < 4 || !n.is_power_of_two() {
            return Err(Error::Length(format!(
                "grid size must be a power of two >= 4, got {n}"
            )));
        }
        if !(b > a) || !a.is_finite() || !b.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "grid endpoints must satisfy b > a, got a={a} b={b}"
            )));
        }
        Ok(Grid1D { n, a, b })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn length(&self) -> f64 {
        self.b - self.a
    }

    pub fn dx(&self) -> f64 {
        (self.b - self.a) / self.n as f64
    }

    pub fn point(&self, j: usize) -> f64 {
        self.a + j as f64 * self.dx()
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.point(j)).collect()
    }

    /// Physical wavenumbers k_m = 2 pi m / (b - a) in the rfft layout.
    pub fn wavenumbers(&self) -> Vec<f64> {
        fft::rfft_wavenumbers(self.n, self.length())
    }

    pub fn fft_plan(&self) -> FftPlan {
        FftPlan::new(self.n).expect("grid size already validated")
    }

    pub fn rfft(&self, u: &[f64]) -> Result<Spectrum> {
        fft::rfft_on(u, self.length())
    }

    pub fn irfft(&self, spectrum: &Spectrum) -> Result<Vec<f64>> {
        fft::irfft(spectrum, self.n)
    }

    /// Evaluate a function at the grid points.
    pub fn sample(&self, f: impl Fn(f64) -> f64) -> Vec<f64> {
        (0..self.n).map(|j| f(self.point(j))).collect()
    }
}
