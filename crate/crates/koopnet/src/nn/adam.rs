//! Adam with bias correction.

use crate::error::{Error, Result};
use crate::nn::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

#[derive(Debug, Clone)]
pub struct AdamState {
    m: Vec<Tensor>,
    v: Vec<Tensor>,
    step: u64,
    pub config: AdamConfig,
}

impl AdamState {
    pub fn new(param_shapes: &[&[usize]], config: AdamConfig) -> Self {
        AdamState {
            m: param_shapes.iter().map(|s| Tensor::zeros(s)).collect(),
            v: param_shapes.iter().map(|s| Tensor::zeros(s)).collect(),
            step: 0,
            config,
        }
    }

    pub fn for_params(params: &[&Tensor], config: AdamConfig) -> Self {
        let shapes: Vec<&[usize]> = params.iter().map(|p| p.shape()).collect();
        AdamState::new(&shapes, config)
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// Reset moments and the step counter (used after a warm start).
    pub fn reset(&mut self) {
        self.step = 0;
        for t in self.m.iter_mut().chain(self.v.iter_mut()) {
            t.fill(0.0);
        }
    }
}

/// One Adam update over a parameter list. `names` is used only for
/// diagnostics when a gradient is non-finite.
pub fn adam_step(
    params: &mut [&mut Tensor],
    grads: &[Tensor],
    names: &[String],
    state: &mut AdamState,
) -> Result<()> {
    if params.len() != grads.len() || params.len() != state.m.len() {
        return Err(Error::Shape(format!(
            "adam: {} params, {} grads, {} moment slots",
            params.len(),
            grads.len(),
            state.m.len()
        )));
    }
    for (i, (p, g)) in params.iter().zip(grads).enumerate() {
        if p.shape() != g.shape() {
            return Err(Error::Shape(format!(
                "adam: parameter {} shape {:?} vs gradient {:?}",
                names.get(i).map(String::as_str).unwrap_or("?"),
                p.shape(),
                g.shape()
            )));
        }
        if !g.is_finite() {
            return Err(Error::NonFinite(format!(
                "gradient for parameter {}",
                names.get(i).map(String::as_str).unwrap_or("?")
            )));
        }
    }

    state.step += 1;
    let t = state.step as i32;
    let c = state.config;
    let bc1 = 1.0 - c.beta1.powi(t);
    let bc2 = 1.0 - c.beta2.powi(t);

    for ((p, g), (m, v)) in params
        .iter_mut()
        .zip(grads)
        .zip(state.m.iter_mut().zip(state.v.iter_mut()))
    {
        let pd = p.data_mut();
        let md = m.data_mut();
        let vd = v.data_mut();
        for i in 0..pd.len() {
            let gi = g.data()[i];
            md[i] = c.beta1 * md[i] + (1.0 - c.beta1) * gi;
            vd[i] = c.beta2 * vd[i] + (1.0 - c.beta2) * gi * gi;
            let mhat = md[i] / bc1;
            let vhat = vd[i] / bc2;
            pd[i] -= c.learning_rate * mhat / (vhat.sqrt() + c.epsilon);
        }
    }
    Ok(())
}
