//! The five-part model: outer residual encoder, inner linear encoder, the
//! latent dynamics matrix, inner linear decoder, outer residual decoder.
//!
//! At construction the inner maps and the dynamics matrix are (truncated)
//! identities, so a model whose outer residual branches output zero is
//! exactly the identity map.

use std::path::Path;

use crate::error::{Error, Result};
use crate::nn::checkpoint::{load_checkpoint, save_checkpoint};
use crate::nn::layers::{Activation, LayerSpec};
use crate::nn::network::Network;
use crate::nn::tensor::{axpy, dot, Tensor};
use crate::numerics::matrix::Mat;
use crate::numerics::rng::CounterRng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OuterKind {
    /// No outer nets: the whole model is linear (heat).
    None,
    /// Six fully-connected layers of width n, ReLU on all but the last.
    Mlp,
    /// Conv stack 8/16/32/64 filters with average pooling, then dense layers.
    ConvNet,
}

impl OuterKind {
    pub fn name(&self) -> &'static str {
        match self {
            OuterKind::None => "none",
            OuterKind::Mlp => "mlp",
            OuterKind::ConvNet => "conv",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "none" => OuterKind::None,
            "mlp" => OuterKind::Mlp,
            "conv" => OuterKind::ConvNet,
            _ => {
                return Err(Error::Config(format!(
                    "unknown outer network kind {s:?} (expected none, mlp, or conv)"
                )))
            }
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KConstraint {
    Diagonal,
    Full,
}

impl KConstraint {
    pub fn name(&self) -> &'static str {
        match self {
            KConstraint::Diagonal => "diagonal",
            KConstraint::Full => "full",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "diagonal" => KConstraint::Diagonal,
            "full" => KConstraint::Full,
            _ => {
                return Err(Error::Config(format!(
                    "unknown K constraint {s:?} (expected diagonal or full)"
                )))
            }
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelArch {
    pub n: usize,
    pub r: usize,
    pub outer: OuterKind,
    pub k_constraint: KConstraint,
    /// Skip connections on the outer nets; turning this off is the
    /// architecture ablation (parameter counts are unchanged).
    pub residual: bool,
}

impl ModelArch {
    pub fn validate(&self) -> Result<()> {
        if self.r == 0 || self.r > self.n {
            return Err(Error::InvalidArgument(format!(
                "latent rank must be in 1..=n, got r={} n={}",
                self.r, self.n
            )));
        }
        if self.outer == OuterKind::ConvNet && self.n % 8 != 0 {
            return Err(Error::InvalidArgument(format!(
                "conv outer nets pool three times; n={} is not divisible by 8",
                self.n
            )));
        }
        Ok(())
    }

    /// Canonical descriptor stored in checkpoints; must match exactly for a
    /// warm start.
    pub fn descriptor(&self) -> String {
        format!(
            "koopman v1 n={} r={} outer={} k={} residual={}",
            self.n,
            self.r,
            self.outer.name(),
            self.k_constraint.name(),
            self.residual
        )
    }

    pub fn parse_descriptor(desc: &str) -> Result<Self> {
        let mut fields = std::collections::BTreeMap::new();
        let mut words = desc.split_whitespace();
        if words.next() != Some("koopman") || words.next() != Some("v1") {
            return Err(Error::Checkpoint(format!(
                "not a koopman v1 descriptor: {desc:?}"
            )));
        }
        for w in words {
            let (k, v) = w
                .split_once('=')
                .ok_or_else(|| Error::Checkpoint(format!("bad descriptor field {w:?}")))?;
            fields.insert(k.to_string(), v.to_string());
        }
        let get = |k: &str| -> Result<&String> {
            fields
                .get(k)
                .ok_or_else(|| Error::Checkpoint(format!("descriptor missing field {k}")))
        };
        Ok(ModelArch {
            n: get("n")?.parse().map_err(|_| Error::Checkpoint("bad n".into()))?,
            r: get("r")?.parse().map_err(|_| Error::Checkpoint("bad r".into()))?,
            outer: OuterKind::parse(get("outer")?)?,
            k_constraint: KConstraint::parse(get("k")?)?,
            residual: get("residual")?
                .parse()
                .map_err(|_| Error::Checkpoint("bad residual flag".into()))?,
        })
    }

    fn outer_specs(&self) -> Vec<LayerSpec> {
        let n = self.n;
        match self.outer {
            OuterKind::None => Vec::new(),
            OuterKind::Mlp => vec![
                LayerSpec::dense(n, n, Activation::Relu),
                LayerSpec::dense(n, n, Activation::Relu),
                LayerSpec::dense(n, n, Activation::Relu),
                LayerSpec::dense(n, n, Activation::Relu),
                LayerSpec::dense(n, n, Activation::Relu),
                LayerSpec::dense(n, n, Activation::None),
            ],
            OuterKind::ConvNet => vec![
                LayerSpec::Reshape { channels: 1 },
                LayerSpec::conv(1, 8, Activation::Relu),
                LayerSpec::pool(),
                LayerSpec::conv(8, 16, Activation::Relu),
                LayerSpec::pool(),
                LayerSpec::conv(16, 32, Activation::Relu),
                LayerSpec::pool(),
                LayerSpec::conv(32, 64, Activation::Relu),
                LayerSpec::Flatten,
                LayerSpec::dense(64 * (n / 8), 128, Activation::Relu),
                LayerSpec::dense(128, n, Activation::None),
            ],
        }
    }
}

/// Fully-connected linear map with bias.
#[derive(Debug, Clone, PartialEq)]
pub struct Linear {
    pub weight: Tensor, // [out, in]
    pub bias: Tensor,   // [out]
}

impl Linear {
    /// Truncated-identity weights, zero bias.
    fn identity(out: usize, input: usize) -> Self {
        let mut w = Tensor::zeros(&[out, input]);
        for i in 0..out.min(input) {
            w.data_mut()[i * input + i] = 1.0;
        }
        Linear {
            weight: w,
            bias: Tensor::zeros(&[out]),
        }
    }

    pub fn out_width(&self) -> usize {
        self.weight.shape()[0]
    }

    pub fn in_width(&self) -> usize {
        self.weight.shape()[1]
    }

    pub fn forward(&self, x: &Tensor) -> Tensor {
        let (rows, nin, nout) = (x.shape()[0], self.in_width(), self.out_width());
        debug_assert_eq!(x.shape()[1], nin);
        let mut out = Tensor::zeros(&[rows, nout]);
        for r in 0..rows {
            let xr = x.row(r);
            let o = out.row_mut(r);
            for j in 0..nout {
                o[j] = self.bias.data()[j] + dot(&self.weight.data()[j * nin..(j + 1) * nin], xr);
            }
        }
        out
    }

    /// Returns (dW, db, dX) for upstream dL/d(output).
    pub fn backward(&self, x: &Tensor, upstream: &Tensor) -> (Tensor, Tensor, Tensor) {
        let (rows, nin, nout) = (x.shape()[0], self.in_width(), self.out_width());
        let mut dw = Tensor::zeros(&[nout, nin]);
        let mut db = Tensor::zeros(&[nout]);
        let mut dx = Tensor::zeros(&[rows, nin]);
        for r in 0..rows {
            let xr = x.row(r);
            let u = upstream.row(r);
            let gx = dx.row_mut(r);
            for j in 0..nout {
                let uj = u[j];
                if uj == 0.0 {
                    continue;
                }
                db.data_mut()[j] += uj;
                axpy(&mut dw.data_mut()[j * nin..(j + 1) * nin], uj, xr);
                axpy(gx, uj, &self.weight.data()[j * nin..(j + 1) * nin]);
            }
        }
        (dw, db, dx)
    }
}

/// The latent dynamics matrix, dense or constrained to its diagonal.
#[derive(Debug, Clone, PartialEq)]
pub enum KMatrix {
    Full(Tensor),     // [r, r]
    Diagonal(Tensor), // [r]
}

impl KMatrix {
    fn identity(r: usize, constraint: KConstraint) -> Self {
        match constraint {
            KConstraint::Full => {
                let mut t = Tensor::zeros(&[r, r]);
                for i in 0..r {
                    t.data_mut()[i * r + i] = 1.0;
                }
                KMatrix::Full(t)
            }
            KConstraint::Diagonal => {
                let mut t = Tensor::zeros(&[r]);
                t.fill(1.0);
                KMatrix::Diagonal(t)
            }
        }
    }

    pub fn rank(&self) -> usize {
        match self {
            KMatrix::Full(t) => t.shape()[0],
            KMatrix::Diagonal(t) => t.shape()[0],
        }
    }

    /// y <- K y for one latent vector.
    pub fn apply(&self, y: &mut [f64], scratch: &mut Vec<f64>) {
        match self {
            KMatrix::Diagonal(d) => {
                for (v, &k) in y.iter_mut().zip(d.data()) {
                    *v *= k;
                }
            }
            KMatrix::Full(w) => {
                let r = y.len();
                scratch.clear();
                scratch.extend((0..r).map(|i| dot(&w.data()[i * r..(i + 1) * r], y)));
                y.copy_from_slice(scratch);
            }
        }
    }

    /// Densify for spectral analysis.
    pub fn realize(&self) -> Mat {
        match self {
            KMatrix::Full(t) => {
                let r = t.shape()[0];
                Mat::from_vec(r, r, t.data().to_vec()).expect("square by construction")
            }
            KMatrix::Diagonal(t) => Mat::diag(t.data()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KoopmanModel {
    arch: ModelArch,
    pub(crate) chi: Option<Network>,
    pub(crate) zeta: Option<Network>,
    pub(crate) psi: Linear,
    pub(crate) psi_inv: Linear,
    pub(crate) k: KMatrix,
}

impl KoopmanModel {
    /// Fresh model: identity inner maps and dynamics, variance-scaled random
    /// outer nets (zero biases).
    pub fn new(arch: ModelArch, rng: &mut CounterRng) -> Result<Self> {
        arch.validate()?;
        let specs = arch.outer_specs();
        let (chi, zeta) = if specs.is_empty() {
            (None, None)
        } else {
            let chi = Network::new(arch.n, specs.clone(), arch.residual, rng)?;
            let zeta = Network::new(arch.n, specs, arch.residual, rng)?;
            (Some(chi), Some(zeta))
        };
        Ok(KoopmanModel {
            arch,
            chi,
            zeta,
            psi: Linear::identity(arch.r, arch.n),
            psi_inv: Linear::identity(arch.n, arch.r),
            k: KMatrix::identity(arch.r, arch.k_constraint),
        })
    }

    /// Zero the outer nets' output layers so the residual branches vanish
    /// and the whole model is exactly the identity (up to rank truncation).
    pub fn zero_outer_outputs(&mut self) {
        if let Some(chi) = self.chi.as_mut() {
            chi.zero_output_layer();
        }
        if let Some(zeta) = self.zeta.as_mut() {
            zeta.zero_output_layer();
        }
    }

    pub fn arch(&self) -> &ModelArch {
        &self.arch
    }

    pub fn k(&self) -> &KMatrix {
        &self.k
    }

    pub fn realized_k(&self) -> Mat {
        self.k.realize()
    }

    fn check_width(&self, t: &Tensor, width: usize, what: &str) -> Result<()> {
        if t.shape().len() != 2 || t.shape()[1] != width {
            return Err(Error::Shape(format!(
                "{what} expects [batch, {width}], got {:?}",
                t.shape()
            )));
        }
        Ok(())
    }

    /// Outer coordinate change (chi + I), the identity when there is no
    /// outer net.
    pub fn outer_encode(&self, u: &Tensor) -> Result<Tensor> {
        self.check_width(u, self.arch.n, "outer encoder")?;
        match &self.chi {
            Some(net) => Ok(net.forward(u)?.0),
            None => Ok(u.clone()),
        }
    }

    pub fn encode(&self, u: &Tensor) -> Result<Tensor> {
        Ok(self.psi.forward(&self.outer_encode(u)?))
    }

    pub fn decode(&self, y: &Tensor) -> Result<Tensor> {
        self.check_width(y, self.arch.r, "decoder")?;
        let z = self.psi_inv.forward(y);
        match &self.zeta {
            Some(net) => Ok(net.forward(&z)?.0),
            None => Ok(z),
        }
    }

    /// p-step prediction. The latent state is advanced by p successive
    /// multiplications by K; nothing passes back through the decoder until
    /// the end.
    pub fn predict(&self, u0: &Tensor, p: usize) -> Result<Tensor> {
        let mut y = self.encode(u0)?;
        let rows = y.shape()[0];
        let r = self.arch.r;
        let mut scratch = Vec::with_capacity(r);
        for _ in 0..p {
            for row in 0..rows {
                self.k.apply(&mut y.row_mut(row)[..], &mut scratch);
            }
        }
        self.decode(&y)
    }

    /// Canonical parameter order: chi, psi (weight, bias), K, psi_inv
    /// (weight, bias), zeta. Checkpoints store tensors in this order.
    pub fn params(&self) -> Vec<&Tensor> {
        let mut out = Vec::new();
        if let Some(chi) = &self.chi {
            out.extend(chi.params());
        }
        out.push(&self.psi.weight);
        out.push(&self.psi.bias);
        out.push(match &self.k {
            KMatrix::Full(t) | KMatrix::Diagonal(t) => t,
        });
        out.push(&self.psi_inv.weight);
        out.push(&self.psi_inv.bias);
        if let Some(zeta) = &self.zeta {
            out.extend(zeta.params());
        }
        out
    }

    pub fn params_mut(&mut self) -> Vec<&mut Tensor> {
        let mut out = Vec::new();
        if let Some(chi) = self.chi.as_mut() {
            out.extend(chi.params_mut());
        }
        out.push(&mut self.psi.weight);
        out.push(&mut self.psi.bias);
        out.push(match &mut self.k {
            KMatrix::Full(t) | KMatrix::Diagonal(t) => t,
        });
        out.push(&mut self.psi_inv.weight);
        out.push(&mut self.psi_inv.bias);
        if let Some(zeta) = self.zeta.as_mut() {
            out.extend(zeta.params_mut());
        }
        out
    }

    pub fn param_names(&self) -> Vec<String> {
        let mut out = Vec::new();
        if let Some(chi) = &self.chi {
            out.extend(chi.param_names("chi"));
        }
        out.push("psi.weight".into());
        out.push("psi.bias".into());
        out.push("k".into());
        out.push("psi_inv.weight".into());
        out.push("psi_inv.bias".into());
        if let Some(zeta) = &self.zeta {
            out.extend(zeta.param_names("zeta"));
        }
        out
    }

    pub fn param_count(&self) -> usize {
        self.params().iter().map(|t| t.len()).sum()
    }

    /// Sum of squared weights for l2 regularization; biases excluded, the
    /// dynamics matrix included.
    pub fn weight_sq_sum(&self) -> f64 {
        let mut sum = 0.0;
        if let Some(chi) = &self.chi {
            sum += chi.weight_sq_sum();
        }
        sum += self.psi.weight.sq_sum();
        sum += match &self.k {
            KMatrix::Full(t) | KMatrix::Diagonal(t) => t.sq_sum(),
        };
        sum += self.psi_inv.weight.sq_sum();
        if let Some(zeta) = &self.zeta {
            sum += zeta.weight_sq_sum();
        }
        sum
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        save_checkpoint(path, &self.arch.descriptor(), &self.params())
    }

    /// Load a model from a checkpoint; the architecture comes from the
    /// stored descriptor.
    pub fn load(path: &Path) -> Result<Self> {
        let (desc, tensors) = load_checkpoint(path)?;
        let arch = ModelArch::parse_descriptor(&desc)?;
        let mut rng = CounterRng::new(0);
        let mut model = KoopmanModel::new(arch, &mut rng)?;
        model.assign_tensors(tensors, path)?;
        Ok(model)
    }

    /// Load checkpointed parameters into an existing architecture. The
    /// descriptor must match exactly; differing fields are listed.
    pub fn warm_start(arch: ModelArch, path: &Path) -> Result<Self> {
        arch.validate()?;
        let (desc, tensors) = load_checkpoint(path)?;
        let want = arch.descriptor();
        if desc != want {
            let diffs = descriptor_diff(&want, &desc);
            return Err(Error::Checkpoint(format!(
                "{}: architecture mismatch ({diffs})",
                path.display()
            )));
        }
        let mut rng = CounterRng::new(0);
        let mut model = KoopmanModel::new(arch, &mut rng)?;
        model.assign_tensors(tensors, path)?;
        Ok(model)
    }

    fn assign_tensors(&mut self, tensors: Vec<Tensor>, path: &Path) -> Result<()> {
        let mut slots = self.params_mut();
        if tensors.len() != slots.len() {
            return Err(Error::Checkpoint(format!(
                "{}: {} tensors stored, architecture needs {}",
                path.display(),
                tensors.len(),
                slots.len()
            )));
        }
        for (i, (slot, t)) in slots.iter_mut().zip(tensors).enumerate() {
            if slot.shape() != t.shape() {
                return Err(Error::Checkpoint(format!(
                    "{}: tensor {i} has shape {:?}, expected {:?}",
                    path.display(),
                    t.shape(),
                    slot.shape()
                )));
            }
            **slot = t;
        }
        Ok(())
    }
}

/// Human-readable field-by-field diff of two descriptors.
fn descriptor_diff(want: &str, got: &str) -> String {
    let parse = |s: &str| -> std::collections::BTreeMap<String, String> {
        s.split_whitespace()
            .filter_map(|w| w.split_once('='))
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect()
    };
    let a = parse(want);
    let b = parse(got);
    let mut diffs = Vec::new();
    for (k, va) in &a {
        match b.get(k) {
            Some(vb) if vb != va => diffs.push(format!("{k}: expected {va}, found {vb}")),
            None => diffs.push(format!("{k}: missing in checkpoint")),
            _ => {}
        }
    }
    for k in b.keys() {
        if !a.contains_key(k) {
            diffs.push(format!("{k}: unexpected in checkpoint"));
        }
    }
    if diffs.is_empty() {
        format!("descriptor text differs: expected {want:?}, found {got:?}")
    } else {
        diffs.join("; ")
    }
}
