//! The five-term objective and its gradients.
//!
//! Terms (all mean-squared, averaged over every element they touch):
//!   1. full autoencoder reconstruction,
//!   2. multi-step prediction in state space through K^p,
//!   3. multi-step linearity in latent space,
//!   4. outer autoencoder reconstruction,
//!   5. inner reconstruction of the outer-encoded state,
//! plus l2 regularization over weight matrices (biases excluded).
//!
//! Latent predictions advance by successive multiplication by K; gradients
//! flow through both sides of the linearity loss and back through time.

use crate::error::{Error, Result};
use crate::koopman::model::{KMatrix, KoopmanModel};
use crate::nn::tensor::{axpy, Tensor};
use crate::pde::Trajectory;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossWeights {
    pub w: [f64; 5],
    pub l2: f64,
    /// Maximum prediction horizon P for losses 2 and 3; 0 means T-1.
    pub horizon: usize,
    /// Stride over the start index k (1 = every valid k).
    pub k_stride: usize,
}

impl Default for LossWeights {
    fn default() -> Self {
        LossWeights {
            w: [1.0; 5],
            l2: 1e-8,
            horizon: 0,
            k_stride: 1,
        }
    }
}

impl LossWeights {
    pub fn validate(&self) -> Result<()> {
        if self.w.iter().any(|&w| w < 0.0 || !w.is_finite()) {
            return Err(Error::InvalidArgument("loss weights must be nonnegative".into()));
        }
        if self.w.iter().all(|&w| w == 0.0) {
            return Err(Error::InvalidArgument("at least one loss weight must be positive".into()));
        }
        if self.l2 < 0.0 || !self.l2.is_finite() {
            return Err(Error::InvalidArgument("l2 coefficient must be nonnegative".into()));
        }
        if self.k_stride == 0 {
            return Err(Error::InvalidArgument("k stride must be at least 1".into()));
        }
        Ok(())
    }

    /// Resolved horizon for trajectories of length T.
    pub fn horizon_for(&self, t_len: usize) -> Result<usize> {
        let p = if self.horizon == 0 {
            t_len - 1
        } else {
            self.horizon
        };
        if p == 0 || p > t_len - 1 {
            return Err(Error::InvalidArgument(format!(
                "prediction horizon {p} must be in 1..={} for T = {t_len}",
                t_len - 1
            )));
        }
        Ok(p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossReport {
    pub loss: [f64; 5],
    pub l2_term: f64,
    pub total: f64,
}

impl LossReport {
    pub fn assemble(loss: [f64; 5], l2_term: f64, weights: &LossWeights) -> Self {
        let total = weights
            .w
            .iter()
            .zip(&loss)
            .map(|(w, l)| w * l)
            .sum::<f64>()
            + weights.l2 * l2_term;
        LossReport {
            loss,
            l2_term,
            total,
        }
    }
}

/// Global element counts for each loss term; fixed by the batch geometry so
/// per-chunk gradients can be normalized identically and summed.
#[derive(Debug, Clone, Copy)]
pub struct LossNorm {
    pub denom: [f64; 5],
    pub horizon: usize,
}

impl LossNorm {
    pub fn for_batch(
        batch_trajectories: usize,
        t_len: usize,
        n: usize,
        r: usize,
        weights: &LossWeights,
    ) -> Result<Self> {
        let p = weights.horizon_for(t_len)?;
        let pairs: usize = (0..=t_len - 2)
            .step_by(weights.k_stride)
            .map(|k| p.min(t_len - 1 - k))
            .sum();
        if pairs == 0 {
            return Err(Error::InvalidArgument(
                "no (k, p) pairs; shorten the stride or lengthen trajectories".into(),
            ));
        }
        let b = batch_trajectories as f64;
        let state_elems = b * t_len as f64 * n as f64;
        let pred_elems = b * pairs as f64 * n as f64;
        let latent_elems = b * pairs as f64 * r as f64;
        Ok(LossNorm {
            denom: [state_elems, pred_elems, latent_elems, state_elems, state_elems],
            horizon: p,
        })
    }
}

fn sq_diff_sum(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(&x, &y)| (x - y) * (x - y)).sum()
}

/// Raw squared-error sums for one slice of trajectories, gradients already
/// scaled by the global norms so chunk results add exactly.
pub(crate) struct ChunkResult {
    pub sums: [f64; 5],
    pub grads: Option<Vec<Tensor>>,
}

pub(crate) fn loss_chunk(
    model: &KoopmanModel,
    trajs: &[&Trajectory],
    weights: &LossWeights,
    norm: &LossNorm,
    want_grads: bool,
) -> Result<ChunkResult> {
    let arch = *model.arch();
    let (n, r) = (arch.n, arch.r);
    let b = trajs.len();
    if b == 0 {
        return Err(Error::InvalidArgument("empty trajectory batch".into()));
    }
    let t_len = trajs[0].t_len();
    for (i, tr) in trajs.iter().enumerate() {
        if tr.n() != n {
            return Err(Error::Shape(format!(
                "trajectory {i} has width {}, model expects {n}",
                tr.n()
            )));
        }
        if tr.t_len() != t_len {
            return Err(Error::Shape("trajectories in a batch must share T".into()));
        }
    }
    let p_max = norm.horizon;
    let stride = weights.k_stride;

    // Stack all states: row b*T + t.
    let rows = b * t_len;
    let mut u = Tensor::zeros(&[rows, n]);
    for (bi, tr) in trajs.iter().enumerate() {
        u.data_mut()[bi * t_len * n..(bi + 1) * t_len * n].copy_from_slice(tr.states());
    }

    // Forward: outer encode, inner encode, inner decode, outer decode.
    let (chi_out, cache_chi) = match &model.chi {
        Some(net) => {
            let (out, cache) = net.forward(&u)?;
            (out, Some(cache))
        }
        None => (u.clone(), None),
    };
    let y = model.psi.forward(&chi_out);
    let z = model.psi_inv.forward(&y);
    let (x1, cache_z1) = match &model.zeta {
        Some(net) => {
            let (out, cache) = net.forward(&z)?;
            (out, Some(cache))
        }
        None => (z.clone(), None),
    };
    let (x4, cache_z4) = match &model.zeta {
        Some(net) => {
            let (out, cache) = net.forward(&chi_out)?;
            (out, Some(cache))
        }
        None => (chi_out.clone(), None),
    };

    let mut sums = [0.0f64; 5];
    let mut per_traj = vec![[0.0f64; 5]; b];
    for bi in 0..b {
        let lo = bi * t_len * n;
        let hi = (bi + 1) * t_len * n;
        let s1 = sq_diff_sum(&x1.data()[lo..hi], &u.data()[lo..hi]);
        let s4 = sq_diff_sum(&x4.data()[lo..hi], &u.data()[lo..hi]);
        let s5 = sq_diff_sum(&chi_out.data()[lo..hi], &z.data()[lo..hi]);
        per_traj[bi][0] = s1;
        per_traj[bi][3] = s4;
        per_traj[bi][4] = s5;
        sums[0] += s1;
        sums[3] += s4;
        sums[4] += s5;
    }

    // Latent chains. Chain rows for (k, p = 1..=pk) are contiguous in zp.
    struct Chain {
        start_row: usize, // global row index of u_k / y_k
        pk: usize,
        offset: usize, // first row of this chain inside zp
    }
    let mut chains: Vec<Chain> = Vec::new();
    let mut n_pred = 0usize;
    for bi in 0..b {
        for k in (0..=t_len - 2).step_by(stride) {
            let pk = p_max.min(t_len - 1 - k);
            chains.push(Chain {
                start_row: bi * t_len + k,
                pk,
                offset: n_pred,
            });
            n_pred += pk;
        }
    }

    let mut zp = Tensor::zeros(&[n_pred, r]);
    let mut target_rows = vec![0usize; n_pred];
    let mut scratch = Vec::with_capacity(r);
    {
        let zp_data = zp.data_mut();
        for chain in &chains {
            let mut state: Vec<f64> = y.row(chain.start_row).to_vec();
            for p in 1..=chain.pk {
                model.k.apply(&mut state, &mut scratch);
                let row = chain.offset + p - 1;
                zp_data[row * r..(row + 1) * r].copy_from_slice(&state);
                let target = chain.start_row + p;
                target_rows[row] = target;
                let bi = chain.start_row / t_len;
                let s3 = sq_diff_sum(&state, y.row(target));
                per_traj[bi][2] += s3;
                sums[2] += s3;
            }
        }
    }

    // Decode all latent predictions in one pass.
    let d = model.psi_inv.forward(&zp);
    let (x2, cache_d) = match &model.zeta {
        Some(net) => {
            let (out, cache) = net.forward(&d)?;
            (out, Some(cache))
        }
        None => (d.clone(), None),
    };
    for (row, &target) in target_rows.iter().enumerate() {
        let s2 = sq_diff_sum(x2.row(row), u.row(target));
        per_traj[target / t_len][1] += s2;
        sums[1] += s2;
    }

    if sums.iter().any(|s| !s.is_finite()) {
        let offender = per_traj
            .iter()
            .position(|t| t.iter().any(|s| !s.is_finite()))
            .unwrap_or(0);
        return Err(Error::NonFinite(format!(
            "loss for trajectory {offender} of this batch"
        )));
    }

    if !want_grads {
        return Ok(ChunkResult { sums, grads: None });
    }

    // ---- Backward ----
    let scale = |i: usize| 2.0 * weights.w[i] / norm.denom[i];

    // dX1, dX4, dX2, and the loss-5 pieces.
    let mut d_x1 = Tensor::zeros(&[rows, n]);
    let mut d_x4 = Tensor::zeros(&[rows, n]);
    let mut d_chi = Tensor::zeros(&[rows, n]); // direct loss-5 term into chi_out
    let mut d_z = Tensor::zeros(&[rows, n]); // into Z (inner decode of Y)
    {
        let (s1, s4, s5) = (scale(0), scale(3), scale(4));
        let x1d = x1.data();
        let x4d = x4.data();
        let cd = chi_out.data();
        let zd = z.data();
        let ud = u.data();
        let dx1 = d_x1.data_mut();
        let dx4 = d_x4.data_mut();
        let dchi = d_chi.data_mut();
        let dz = d_z.data_mut();
        for i in 0..rows * n {
            dx1[i] = s1 * (x1d[i] - ud[i]);
            dx4[i] = s4 * (x4d[i] - ud[i]);
            let e5 = s5 * (cd[i] - zd[i]);
            dchi[i] = e5;
            dz[i] = -e5;
        }
    }
    let mut d_x2 = Tensor::zeros(&[n_pred, n]);
    {
        let s2 = scale(1);
        let x2d = x2.data();
        let ud = u.data();
        let dx2 = d_x2.data_mut();
        for (row, &target) in target_rows.iter().enumerate() {
            for j in 0..n {
                dx2[row * n + j] = s2 * (x2d[row * n + j] - ud[target * n + j]);
            }
        }
    }

    // Back through zeta on all three of its uses.
    let mut zeta_grads: Option<Vec<Tensor>> = None;
    let add_grads = |acc: &mut Option<Vec<Tensor>>, g: Vec<Tensor>| {
        match acc {
            None => *acc = Some(g),
            Some(a) => {
                for (t, s) in a.iter_mut().zip(g) {
                    t.add_scaled(&s, 1.0);
                }
            }
        };
    };
    let (d_z_total, d_chi_from_x4, d_d) = match &model.zeta {
        Some(net) => {
            let (g1, dz1) = net.backward(cache_z1.as_ref().unwrap(), &d_x1)?;
            let (g4, dchi4) = net.backward(cache_z4.as_ref().unwrap(), &d_x4)?;
            let (g2, dd) = net.backward(cache_d.as_ref().unwrap(), &d_x2)?;
            add_grads(&mut zeta_grads, g1);
            add_grads(&mut zeta_grads, g4);
            add_grads(&mut zeta_grads, g2);
            let mut dz_total = dz1;
            dz_total.add_scaled(&d_z, 1.0);
            (dz_total, dchi4, dd)
        }
        None => {
            let mut dz_total = d_x1;
            dz_total.add_scaled(&d_z, 1.0);
            (dz_total, d_x4, d_x2)
        }
    };

    // psi_inv on both of its uses (Z from Y, D from ZP).
    let (dw_a, db_a, mut d_y) = model.psi_inv.backward(&y, &d_z_total);
    let (dw_b, db_b, d_zp) = model.psi_inv.backward(&zp, &d_d);
    let mut psi_inv_w_grad = dw_a;
    psi_inv_w_grad.add_scaled(&dw_b, 1.0);
    let mut psi_inv_b_grad = db_a;
    psi_inv_b_grad.add_scaled(&db_b, 1.0);

    // Latent chains: loss-3 terms plus decoded-prediction gradients, walked
    // backward through K.
    let s3 = scale(2);
    let mut k_grad = match &model.k {
        KMatrix::Full(t) => Tensor::zeros(t.shape()),
        KMatrix::Diagonal(t) => Tensor::zeros(t.shape()),
    };
    {
        let zp_data = zp.data();
        for chain in &chains {
            let mut carried = vec![0.0f64; r];
            for p in (1..=chain.pk).rev() {
                let row = chain.offset + p - 1;
                let z_p = &zp_data[row * r..(row + 1) * r];
                let target = chain.start_row + p;
                // g = carried + loss3 direct + decoded-prediction path
                let mut g: Vec<f64> = carried;
                {
                    let y_t = y.row(target);
                    let dzp_row = d_zp.row(row);
                    for i in 0..r {
                        let e3 = s3 * (z_p[i] - y_t[i]);
                        g[i] += e3 + dzp_row[i];
                    }
                    // loss-3 target side flows back into the encoder
                    let dy_t = d_y.row_mut(target);
                    for i in 0..r {
                        dy_t[i] -= s3 * (z_p[i] - y.row(target)[i]);
                    }
                }
                let z_prev_owned: Vec<f64>;
                let z_prev: &[f64] = if p == 1 {
                    y.row(chain.start_row)
                } else {
                    let prev_row = chain.offset + p - 2;
                    z_prev_owned = zp_data[prev_row * r..(prev_row + 1) * r].to_vec();
                    &z_prev_owned
                };
                match (&model.k, k_grad.data_mut()) {
                    (KMatrix::Full(kt), kg) => {
                        for i in 0..r {
                            axpy(&mut kg[i * r..(i + 1) * r], g[i], z_prev);
                        }
                        // carried = K^T g
                        let kd = kt.data();
                        let mut back = vec![0.0f64; r];
                        for i in 0..r {
                            axpy(&mut back, g[i], &kd[i * r..(i + 1) * r]);
                        }
                        carried = back;
                    }
                    (KMatrix::Diagonal(kt), kg) => {
                        let kd = kt.data();
                        let mut back = vec![0.0f64; r];
                        for i in 0..r {
                            kg[i] += g[i] * z_prev[i];
                            back[i] = kd[i] * g[i];
                        }
                        carried = back;
                    }
                }
            }
            let dy_start = d_y.row_mut(chain.start_row);
            for i in 0..r {
                dy_start[i] += carried[i];
            }
        }
    }

    // psi backward, then chi.
    let (psi_w_grad, psi_b_grad, d_chi_from_psi) = model.psi.backward(&chi_out, &d_y);
    let mut d_chi_total = d_chi;
    d_chi_total.add_scaled(&d_chi_from_x4, 1.0);
    d_chi_total.add_scaled(&d_chi_from_psi, 1.0);

    let chi_grads: Option<Vec<Tensor>> = match &model.chi {
        Some(net) => {
            let (g, _) = net.backward(cache_chi.as_ref().unwrap(), &d_chi_total)?;
            Some(g)
        }
        None => None,
    };

    // Assemble in canonical parameter order.
    let mut grads = Vec::new();
    if let Some(g) = chi_grads {
        grads.extend(g);
    }
    grads.push(psi_w_grad);
    grads.push(psi_b_grad);
    grads.push(k_grad);
    grads.push(psi_inv_w_grad);
    grads.push(psi_inv_b_grad);
    if let Some(g) = zeta_grads {
        grads.extend(g);
    }

    Ok(ChunkResult {
        sums,
        grads: Some(grads),
    })
}

/// Tensors in canonical order that are weight matrices (l2-regularized).
pub(crate) fn weight_mask(model: &KoopmanModel) -> Vec<bool> {
    let mut mask = Vec::new();
    if let Some(chi) = &model.chi {
        for layer in chi.layers() {
            if layer.weight.is_some() {
                mask.push(true);
                mask.push(false);
            }
        }
    }
    mask.push(true); // psi.weight
    mask.push(false); // psi.bias
    mask.push(true); // K
    mask.push(true); // psi_inv.weight
    mask.push(false); // psi_inv.bias
    if let Some(zeta) = &model.zeta {
        for layer in zeta.layers() {
            if layer.weight.is_some() {
                mask.push(true);
                mask.push(false);
            }
        }
    }
    mask
}

/// Evaluate the five losses over a batch of trajectories.
pub fn compute_losses(
    model: &KoopmanModel,
    trajs: &[&Trajectory],
    weights: &LossWeights,
) -> Result<LossReport> {
    weights.validate()?;
    if trajs.is_empty() {
        return Err(Error::InvalidArgument("empty trajectory batch".into()));
    }
    let norm = LossNorm::for_batch(
        trajs.len(),
        trajs[0].t_len(),
        model.arch().n,
        model.arch().r,
        weights,
    )?;
    let chunk = loss_chunk(model, trajs, weights, &norm, false)?;
    let loss = std::array::from_fn(|i| chunk.sums[i] / norm.denom[i]);
    Ok(LossReport::assemble(loss, model.weight_sq_sum(), weights))
}

/// Evaluate losses and the gradient of the weighted total (l2 included).
pub fn compute_losses_with_grads(
    model: &KoopmanModel,
    trajs: &[&Trajectory],
    weights: &LossWeights,
) -> Result<(LossReport, Vec<Tensor>)> {
    weights.validate()?;
    if trajs.is_empty() {
        return Err(Error::InvalidArgument("empty trajectory batch".into()));
    }
    let norm = LossNorm::for_batch(
        trajs.len(),
        trajs[0].t_len(),
        model.arch().n,
        model.arch().r,
        weights,
    )?;
    let chunk = loss_chunk(model, trajs, weights, &norm, true)?;
    let mut grads = chunk.grads.expect("gradients requested");
    // l2 term: d/dw of l2 * sum w^2.
    if weights.l2 > 0.0 {
        let mask = weight_mask(model);
        for ((g, p), is_weight) in grads.iter_mut().zip(model.params()).zip(mask) {
            if is_weight {
                g.add_scaled(p, 2.0 * weights.l2);
            }
        }
    }
    let loss = std::array::from_fn(|i| chunk.sums[i] / norm.denom[i]);
    Ok((
        LossReport::assemble(loss, model.weight_sq_sum(), weights),
        grads,
    ))
}
