//! Ground-truth solvers: exact spectral propagation for the heat equation,
//! pseudospectral ETDRK4 for Burgers and Kuramoto-Sivashinsky, and the
//! exponential-integral change of variables that maps Burgers onto heat.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numerics::grid::Grid1D;
use crate::pde::etdrk4::{dealias, Etdrk4};
use crate::pde::{PdeKind, Trajectory};

/// Exact heat solution u_t = u_xx at time t: every Fourier mode is scaled by
/// exp(-k^2 t).
pub fn heat_solve(grid: &Grid1D, u0: &[f64], t: f64) -> Result<Vec<f64>> {
    if t < 0.0 {
        return Err(Error::InvalidArgument(format!("time must be nonnegative, got {t}")));
    }
    let mut spec = grid.rfft(u0)?;
    for (c, &k) in spec.coefficients.iter_mut().zip(&spec.wavenumbers) {
        *c *= (-k * k * t).exp();
    }
    grid.irfft(&spec)
}

/// Pseudospectral right-hand side used by both nonlinear solvers:
/// N(u) = -(coeff/2) d/dx (u^2), evaluated in physical space and dealiased.
struct QuadraticAdvection<'a> {
    stepper: &'a Etdrk4,
    wavenumbers: &'a [f64],
    coeff: f64,
    n: usize,
}

impl QuadraticAdvection<'_> {
    fn eval(&mut self, v: &[Complex64], out: &mut Vec<Complex64>) {
        let u = self.stepper.plan().irfft(v).expect("shape fixed by stepper");
        let squared: Vec<f64> = u.iter().map(|x| x * x).collect();
        let mut w = self
            .stepper
            .plan()
            .rfft(&squared)
            .expect("shape fixed by stepper");
        for (m, z) in w.iter_mut().enumerate() {
            // conservation form: -(coeff/2) * ik * (u^2)^
            *z *= Complex64::new(0.0, -0.5 * self.coeff * self.wavenumbers[m]);
        }
        dealias(&mut w, self.n);
        *out = w;
    }
}

/// Integrate a semilinear PDE with ETDRK4, storing every `store_every`-th
/// state (the initial state included). Returns T = steps/store_every + 1
/// snapshots.
fn integrate(
    grid: &Grid1D,
    u0: &[f64],
    symbol: &[f64],
    advection_coeff: f64,
    dt_solver: f64,
    steps: usize,
    store_every: usize,
) -> Result<Trajectory> {
    if u0.len() != grid.n() {
        return Err(Error::Shape(format!(
            "initial state length {} does not match grid {}",
            u0.len(),
            grid.n()
        )));
    }
    if store_every == 0 || steps % store_every != 0 {
        return Err(Error::InvalidArgument(format!(
            "store_every {store_every} must divide the step count {steps}"
        )));
    }
    let stepper = Etdrk4::new(grid.n(), symbol, dt_solver)?;
    let wavenumbers = grid.wavenumbers();
    let mut rhs = QuadraticAdvection {
        stepper: &stepper,
        wavenumbers: &wavenumbers,
        coeff: advection_coeff,
        n: grid.n(),
    };

    let mut v = stepper.plan().rfft(u0)?;
    let t_len = steps / store_every + 1;
    let mut states = Vec::with_capacity(t_len * grid.n());
    states.extend_from_slice(u0);

    for step in 1..=steps {
        stepper.step(&mut v, &mut |vh, out| rhs.eval(vh, out));
        if v.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Divergence(format!(
                "non-finite state at solver step {step} (t = {})",
                step as f64 * dt_solver
            )));
        }
        if step % store_every == 0 {
            states.extend_from_slice(&stepper.plan().irfft(&v)?);
        }
    }
    Trajectory::new(*grid, dt_solver * store_every as f64, t_len, states)
}

/// Burgers u_t + eps u u_x = mu u_xx via Fourier pseudospectral ETDRK4.
/// The trajectory stores every solver step.
pub fn burgers_solve_numeric(
    grid: &Grid1D,
    u0: &[f64],
    epsilon: f64,
    mu: f64,
    dt_solver: f64,
    steps: usize,
) -> Result<Trajectory> {
    if !(mu > 0.0) {
        return Err(Error::InvalidArgument(format!("diffusion strength must be positive, got {mu}")));
    }
    let symbol: Vec<f64> = grid.wavenumbers().iter().map(|k| -mu * k * k).collect();
    integrate(grid, u0, &symbol, epsilon, dt_solver, steps, 1)
}

/// Burgers with internal sub-stepping: `substeps` solver steps per stored
/// snapshot, `t_len` snapshots in total (initial state included).
pub fn burgers_solve_sampled(
    grid: &Grid1D,
    u0: &[f64],
    epsilon: f64,
    mu: f64,
    dt: f64,
    t_len: usize,
    substeps: usize,
) -> Result<Trajectory> {
    if !(mu > 0.0) {
        return Err(Error::InvalidArgument(format!("diffusion strength must be positive, got {mu}")));
    }
    if t_len < 2 || substeps == 0 {
        return Err(Error::InvalidArgument("need t_len >= 2 and substeps >= 1".into()));
    }
    let symbol: Vec<f64> = grid.wavenumbers().iter().map(|k| -mu * k * k).collect();
    integrate(
        grid,
        u0,
        &symbol,
        epsilon,
        dt / substeps as f64,
        (t_len - 1) * substeps,
        substeps,
    )
}

/// Kuramoto-Sivashinsky u_t = -u u_x - u_xx - u_xxxx; linear symbol k^2 - k^4.
pub fn ks_solve(grid: &Grid1D, u0: &[f64], dt_solver: f64, steps: usize) -> Result<Trajectory> {
    let symbol: Vec<f64> = grid
        .wavenumbers()
        .iter()
        .map(|k| k * k - k * k * k * k)
        .collect();
    integrate(grid, u0, &symbol, 1.0, dt_solver, steps, 1)
}

/// KS with sub-stepping, mirroring [`burgers_solve_sampled`].
pub fn ks_solve_sampled(
    grid: &Grid1D,
    u0: &[f64],
    dt: f64,
    t_len: usize,
    substeps: usize,
) -> Result<Trajectory> {
    if t_len < 2 || substeps == 0 {
        return Err(Error::InvalidArgument("need t_len >= 2 and substeps >= 1".into()));
    }
    let symbol: Vec<f64> = grid
        .wavenumbers()
        .iter()
        .map(|k| k * k - k * k * k * k)
        .collect();
    integrate(
        grid,
        u0,
        &symbol,
        1.0,
        dt / substeps as f64,
        (t_len - 1) * substeps,
        substeps,
    )
}

/// Dispatch a sampled solve for any PDE kind (heat is exact per snapshot).
pub fn solve_sampled(
    kind: &PdeKind,
    grid: &Grid1D,
    u0: &[f64],
    dt: f64,
    t_len: usize,
    substeps: usize,
) -> Result<Trajectory> {
    match kind {
        PdeKind::Heat => {
            let mut states = Vec::with_capacity(t_len * grid.n());
            for t in 0..t_len {
                states.extend_from_slice(&heat_solve(grid, u0, t as f64 * dt)?);
            }
            Trajectory::new(*grid, dt, t_len, states)
        }
        PdeKind::Burgers { epsilon, mu } => {
            burgers_solve_sampled(grid, u0, *epsilon, *mu, dt, t_len, substeps)
        }
        PdeKind::Ks => ks_solve_sampled(grid, u0, dt, t_len, substeps),
    }
}

/// The linearizing change of variables for Burgers:
/// v(x) = exp[-(eps / 2 mu) * integral_0^x u(s) ds], computed spectrally.
/// Requires zero-mean u so the antiderivative is periodic.
pub fn colehopf_transform(grid: &Grid1D, u: &[f64], epsilon: f64, mu: f64) -> Result<Vec<f64>> {
    let n = grid.n();
    if u.len() != n {
        return Err(Error::Shape(format!(
            "state length {} does not match grid {n}",
            u.len()
        )));
    }
    let mean = u.iter().sum::<f64>() / n as f64;
    if mean.abs() > 1e-12 {
        return Err(Error::InvalidArgument(format!(
            "transform requires zero spatial mean (periodic antiderivative); got mean drift {mean:e}"
        )));
    }

    // Spectral antiderivative F with zero mean, then anchor at x = 0 so the
    // integral runs from 0 to x.
    let spec = grid.rfft(u)?;
    let mut anti = spec.clone();
    anti.coefficients[0] = Complex64::new(0.0, 0.0);
    for m in 1..anti.coefficients.len() {
        let k = anti.wavenumbers[m];
        anti.coefficients[m] = anti.coefficients[m] / Complex64::new(0.0, k);
    }
    let f_vals = grid.irfft(&anti)?;
    // F(0) evaluated spectrally: all complex exponentials are 1 at x = 0.
    let mut f_at_zero = anti.coefficients[0].re;
    for (m, c) in anti.coefficients.iter().enumerate().skip(1) {
        let w = if m == n / 2 { 1.0 } else { 2.0 };
        f_at_zero += w * c.re;
    }
    f_at_zero /= n as f64;

    let scale = -epsilon / (2.0 * mu);
    Ok(f_vals
        .iter()
        .map(|&fx| (scale * (fx - f_at_zero)).exp())
        .collect())
}

/// Solve Burgers through the heat equation: transform, diffuse, invert.
pub fn burgers_solve_colehopf(
    grid: &Grid1D,
    u0: &[f64],
    epsilon: f64,
    mu: f64,
    t: f64,
) -> Result<Vec<f64>> {
    if t < 0.0 {
        return Err(Error::InvalidArgument(format!("time must be nonnegative, got {t}")));
    }
    if !(mu > 0.0) {
        return Err(Error::InvalidArgument(format!("diffusion strength must be positive, got {mu}")));
    }
    let v0 = colehopf_transform(grid, u0, epsilon, mu)?;

    // v solves v_t = mu v_xx.
    let mut spec = grid.rfft(&v0)?;
    for (c, &k) in spec.coefficients.iter_mut().zip(&spec.wavenumbers) {
        *c *= (-mu * k * k * t).exp();
    }
    let v = grid.irfft(&spec)?;
    let vmax = v.iter().fold(0.0f64, |a, &x| a.max(x.abs()));
    if v.iter().any(|&x| x <= 1e-13 * vmax) {
        return Err(Error::Divergence(
            "transformed field crosses zero; outside the transform's validity range".into(),
        ));
    }

    // u = -2 (mu/eps) v_x / v with a spectral derivative.
    let mut dspec = spec.clone();
    for (c, &k) in dspec.coefficients.iter_mut().zip(&dspec.wavenumbers) {
        *c *= Complex64::new(0.0, k);
    }
    let vx = grid.irfft(&dspec)?;
    Ok(vx
        .iter()
        .zip(&v)
        .map(|(&dx, &vv)| -2.0 * mu / epsilon * dx / vv)
        .collect())
}
