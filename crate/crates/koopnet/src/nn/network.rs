//! Layer composition with an optional residual skip.
//!
//! With the residual flag set the network computes `x + h(x)` where `h` is
//! the layer stack; input and output widths must then agree. This is how the
//! outer coordinate transformations stay near the identity.

use crate::error::{Error, Result};
use crate::nn::layers::{Feat, Layer, LayerSpec};
use crate::nn::tensor::Tensor;
use crate::numerics::rng::CounterRng;

#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    layers: Vec<Layer>,
    residual: bool,
    input_width: usize,
    output_width: usize,
}

/// Intermediate activations retained by a forward pass: `values[i]` is the
/// input to layer i, `values[last]` is the stack output before any residual
/// add.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    values: Vec<Tensor>,
    batch: usize,
}

impl Network {
    pub fn new(
        input_width: usize,
        specs: Vec<LayerSpec>,
        residual: bool,
        rng: &mut CounterRng,
    ) -> Result<Self> {
        let mut feat = Feat::flat(input_width);
        let mut layers = Vec::with_capacity(specs.len());
        for spec in specs {
            let layer = Layer::new(spec, feat, rng)?;
            feat = layer.out_feat;
            layers.push(layer);
        }
        if feat.channels != 1 {
            return Err(Error::Shape(
                "network must end in a flat feature axis (add Flatten)".into(),
            ));
        }
        let output_width = feat.width();
        if residual && output_width != input_width {
            return Err(Error::Shape(format!(
                "residual network needs equal input/output widths, got {input_width} vs {output_width}"
            )));
        }
        Ok(Network {
            layers,
            residual,
            input_width,
            output_width,
        })
    }

    pub fn input_width(&self) -> usize {
        self.input_width
    }

    pub fn output_width(&self) -> usize {
        self.output_width
    }

    pub fn residual(&self) -> bool {
        self.residual
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    /// Zero the parameters of the last parameterized layer. For a residual
    /// network this makes the whole map exactly the identity.
    pub fn zero_output_layer(&mut self) {
        for layer in self.layers.iter_mut().rev() {
            if let Some(w) = layer.weight.as_mut() {
                w.fill(0.0);
                if let Some(b) = layer.bias.as_mut() {
                    b.fill(0.0);
                }
                return;
            }
        }
    }

    pub fn forward(&self, batch: &Tensor) -> Result<(Tensor, ForwardCache)> {
        if batch.shape().len() != 2 || batch.shape()[1] != self.input_width {
            return Err(Error::Shape(format!(
                "network expects [batch, {}], got {:?}",
                self.input_width,
                batch.shape()
            )));
        }
        batch.ensure_finite("network input")?;
        let rows = batch.shape()[0];
        let mut values = Vec::with_capacity(self.layers.len() + 1);
        values.push(batch.clone());
        for layer in &self.layers {
            let next = layer.forward(values.last().unwrap())?;
            values.push(next);
        }
        let mut out = values.last().unwrap().clone();
        if self.residual {
            out.add_scaled(batch, 1.0);
        }
        Ok((out, ForwardCache { values, batch: rows }))
    }

    /// Reverse-mode gradients. Returns parameter gradients in [`Network::params`]
    /// order and the gradient with respect to the input batch.
    pub fn backward(&self, cache: &ForwardCache, upstream: &Tensor) -> Result<(Vec<Tensor>, Tensor)> {
        if cache.values.len() != self.layers.len() + 1 {
            return Err(Error::Shape("forward cache does not match this network".into()));
        }
        if upstream.shape() != [cache.batch, self.output_width] {
            return Err(Error::Shape(format!(
                "upstream gradient shape {:?} does not match [{}, {}]",
                upstream.shape(),
                cache.batch,
                self.output_width
            )));
        }
        for (layer, value) in self.layers.iter().zip(&cache.values) {
            if value.shape()[1] != layer.in_feat.width() {
                return Err(Error::Shape("stale forward cache for this network".into()));
            }
        }

        let mut grads: Vec<Tensor> = Vec::new();
        let mut delta = upstream.clone();
        for (i, layer) in self.layers.iter().enumerate().rev() {
            let (dw, db, dx) = layer.backward(&cache.values[i], &cache.values[i + 1], &delta)?;
            if let Some(db) = db {
                grads.push(db);
            }
            if let Some(dw) = dw {
                grads.push(dw);
            }
            delta = dx;
        }
        grads.reverse();
        if self.residual {
            // d/dx (x + h(x)) adds the upstream gradient directly.
            delta.add_scaled(upstream, 1.0);
        }
        Ok((grads, delta))
    }

    /// Parameter tensors in layer order, weight before bias.
    pub fn params(&self) -> Vec<&Tensor> {
        let mut out = Vec::new();
        for layer in &self.layers {
            if let Some(w) = &layer.weight {
                out.push(w);
            }
            if let Some(b) = &layer.bias {
                out.push(b);
            }
        }
        out
    }

    pub fn params_mut(&mut self) -> Vec<&mut Tensor> {
        let mut out = Vec::new();
        for layer in &mut self.layers {
            if let Some(w) = layer.weight.as_mut() {
                out.push(w);
            }
            if let Some(b) = layer.bias.as_mut() {
                out.push(b);
            }
        }
        out
    }

    pub fn param_names(&self, prefix: &str) -> Vec<String> {
        let mut out = Vec::new();
        for (i, layer) in self.layers.iter().enumerate() {
            if layer.weight.is_some() {
                out.push(format!("{prefix}.layer{i}.weight"));
            }
            if layer.bias.is_some() {
                out.push(format!("{prefix}.layer{i}.bias"));
            }
        }
        out
    }

    /// Sum of squared weights, biases excluded (the l2 regularization term).
    pub fn weight_sq_sum(&self) -> f64 {
        self.layers
            .iter()
            .filter_map(|l| l.weight.as_ref())
            .map(|w| w.sq_sum())
            .sum()
    }

    /// Number of scalar parameters.
    pub fn param_count(&self) -> usize {
        self.params().iter().map(|t| t.len()).sum()
    }
}
