//! Fourth-order exponential time differencing (ETDRK4) for stiff semilinear
//! PDEs in Fourier space, with the phi-function coefficients evaluated by
//! contour integration so small |L·h| values stay accurate.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numerics::fft::FftPlan;

/// Number of contour points for the phi-function means.
const CONTOUR_POINTS: usize = 32;

/// Precomputed ETDRK4 stepper for u_t = L u + N(u) with a diagonal (Fourier
/// multiplier) linear part. Works on the rfft half-spectrum.
pub struct Etdrk4 {
    plan: FftPlan,
    h: f64,
    e: Vec<f64>,
    e2: Vec<f64>,
    q: Vec<f64>,
    f1: Vec<f64>,
    f2: Vec<f64>,
    f3: Vec<f64>,
}

impl Etdrk4 {
    /// `symbol[m]` is the (real) linear growth rate of mode m; `h` the step.
    pub fn new(n: usize, symbol: &[f64], h: f64) -> Result<Self> {
        let plan = FftPlan::new(n)?;
        if symbol.len() != n / 2 + 1 {
            return Err(Error::Shape(format!(
                "linear symbol needs {} entries for n = {n}, got {}",
                n / 2 + 1,
                symbol.len()
            )));
        }
        if !(h > 0.0) || !h.is_finite() {
            return Err(Error::InvalidArgument(format!("step size must be positive, got {h}")));
        }

        let modes = symbol.len();
        let mut e = vec![0.0; modes];
        let mut e2 = vec![0.0; modes];
        let mut q = vec![0.0; modes];
        let mut f1 = vec![0.0; modes];
        let mut f2 = vec![0.0; modes];
        let mut f3 = vec![0.0; modes];

        for (m, &lam) in symbol.iter().enumerate() {
            let hl = h * lam;
            e[m] = hl.exp();
            e2[m] = (hl / 2.0).exp();

            // Mean over a unit circle of contour points centred at h*L.
            let mut sq = Complex64::new(0.0, 0.0);
            let mut s1 = Complex64::new(0.0, 0.0);
            let mut s2 = Complex64::new(0.0, 0.0);
            let mut s3 = Complex64::new(0.0, 0.0);
            for j in 0..CONTOUR_POINTS {
                let theta = std::f64::consts::PI * (j as f64 + 0.5) / CONTOUR_POINTS as f64;
                let r = Complex64::new(theta.cos(), theta.sin());
                let lr = r + hl;
                let elr = lr.exp();
                let elr2 = (lr / 2.0).exp();
                let lr3 = lr * lr * lr;
                sq += (elr2 - 1.0) / lr;
                s1 += (-4.0 - lr + elr * (4.0 - 3.0 * lr + lr * lr)) / lr3;
                s2 += (2.0 + lr + elr * (-2.0 + lr)) / lr3;
                s3 += (-4.0 - 3.0 * lr - lr * lr + elr * (4.0 - lr)) / lr3;
            }
            let inv = 1.0 / CONTOUR_POINTS as f64;
            // The upper semicircle suffices for real symbols; means are real.
            q[m] = h * (sq * inv).re;
            f1[m] = h * (s1 * inv).re;
            f2[m] = h * (s2 * inv).re;
            f3[m] = h * (s3 * inv).re;
        }

        Ok(Etdrk4 {
            plan,
            h,
            e,
            e2,
            q,
            f1,
            f2,
            f3,
        })
    }

    pub fn step_size(&self) -> f64 {
        self.h
    }

    pub fn plan(&self) -> &FftPlan {
        &self.plan
    }

    /// Advance the half-spectrum `v` by one step. `nonlinear(v_hat, out)`
    /// writes the transformed nonlinear term into `out`.
    pub fn step(
        &self,
        v: &mut Vec<Complex64>,
        nonlinear: &mut impl FnMut(&[Complex64], &mut Vec<Complex64>),
    ) {
        let modes = v.len();
        let mut nv = vec![Complex64::new(0.0, 0.0); modes];
        let mut na = vec![Complex64::new(0.0, 0.0); modes];
        let mut nb = vec![Complex64::new(0.0, 0.0); modes];
        let mut nc = vec![Complex64::new(0.0, 0.0); modes];

        nonlinear(v, &mut nv);
        let a: Vec<Complex64> = (0..modes)
            .map(|m| self.e2[m] * v[m] + self.q[m] * nv[m])
            .collect();
        nonlinear(&a, &mut na);
        let b: Vec<Complex64> = (0..modes)
            .map(|m| self.e2[m] * v[m] + self.q[m] * na[m])
            .collect();
        nonlinear(&b, &mut nb);
        let c: Vec<Complex64> = (0..modes)
            .map(|m| self.e2[m] * a[m] + self.q[m] * (2.0 * nb[m] - nv[m]))
            .collect();
        nonlinear(&c, &mut nc);

        for m in 0..modes {
            v[m] = self.e[m] * v[m]
                + self.f1[m] * nv[m]
                + 2.0 * self.f2[m] * (na[m] + nb[m])
                + self.f3[m] * nc[m];
        }
    }
}

/// Zero every mode above the 2/3 cutoff; applied to the quadratic nonlinear
/// term before it feeds back into the dynamics.
pub fn dealias(spectrum: &mut [Complex64], n: usize) {
    let cutoff = n / 3;
    for (m, z) in spectrum.iter_mut().enumerate() {
        if m > cutoff {
            *z = Complex64::new(0.0, 0.0);
        }
    }
}
