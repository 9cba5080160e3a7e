//! Layer types: dense, 1-D convolution, average pooling, and the shape
//! adapters that connect convolutional stacks to dense layers.
//!
//! Between layers every tensor is [batch, width]. Convolutional layers
//! interpret the width axis as channel-major [channels, length]
//! (index = channel * length + position), so Flatten and Reshape are
//! metadata-only: they never move data.

use crate::error::{Error, Result};
use crate::nn::tensor::{axpy, dot, Tensor};
use crate::numerics::rng::CounterRng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Relu,
    None,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LayerSpec {
    Dense {
        input: usize,
        output: usize,
        activation: Activation,
    },
    Conv1D {
        in_channels: usize,
        out_channels: usize,
        kernel: usize,
        stride: usize,
        pad_left: usize,
        pad_right: usize,
        activation: Activation,
    },
    AvgPool1D {
        size: usize,
        stride: usize,
    },
    Flatten,
    Reshape {
        channels: usize,
    },
}

impl LayerSpec {
    /// Convolution with the crate-wide defaults: kernel 4, stride 1, and the
    /// asymmetric zero padding (1 left, 2 right) that keeps the spatial
    /// length unchanged.
    pub fn conv(in_channels: usize, out_channels: usize, activation: Activation) -> Self {
        LayerSpec::Conv1D {
            in_channels,
            out_channels,
            kernel: 4,
            stride: 1,
            pad_left: 1,
            pad_right: 2,
            activation,
        }
    }

    pub fn pool() -> Self {
        LayerSpec::AvgPool1D { size: 2, stride: 2 }
    }

    pub fn dense(input: usize, output: usize, activation: Activation) -> Self {
        LayerSpec::Dense {
            input,
            output,
            activation,
        }
    }
}

/// Feature-axis interpretation flowing through the network.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Feat {
    pub channels: usize,
    pub length: usize,
}

impl Feat {
    pub fn flat(width: usize) -> Self {
        Feat {
            channels: 1,
            length: width,
        }
    }

    pub fn width(&self) -> usize {
        self.channels * self.length
    }
}

/// A layer spec plus its parameters and resolved input/output shapes.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub spec: LayerSpec,
    pub weight: Option<Tensor>,
    pub bias: Option<Tensor>,
    pub in_feat: Feat,
    pub out_feat: Feat,
}

impl Layer {
    /// Build a layer, resolving the output shape from `in_feat`.
    /// Weights get variance-scaled uniform init, biases start at zero.
    pub fn new(spec: LayerSpec, in_feat: Feat, rng: &mut CounterRng) -> Result<Self> {
        match spec {
            LayerSpec::Dense {
                input,
                output,
                activation: _,
            } => {
                if in_feat.width() != input {
                    return Err(Error::Shape(format!(
                        "dense layer expects width {input}, got {}",
                        in_feat.width()
                    )));
                }
                if input == 0 || output == 0 {
                    return Err(Error::InvalidArgument("dense layer widths must be positive".into()));
                }
                let limit = (6.0 / (input + output) as f64).sqrt();
                let w = Tensor::from_vec(
                    &[output, input],
                    (0..output * input)
                        .map(|_| rng.next_range(-limit, limit))
                        .collect(),
                )?;
                Ok(Layer {
                    spec,
                    weight: Some(w),
                    bias: Some(Tensor::zeros(&[output])),
                    in_feat,
                    out_feat: Feat::flat(output),
                })
            }
            LayerSpec::Conv1D {
                in_channels,
                out_channels,
                kernel,
                stride,
                pad_left,
                pad_right,
                activation: _,
            } => {
                if kernel == 0 || stride == 0 || in_channels == 0 || out_channels == 0 {
                    return Err(Error::InvalidArgument(
                        "conv kernel, stride, and channel counts must be positive".into(),
                    ));
                }
                if in_feat.channels != in_channels {
                    return Err(Error::Shape(format!(
                        "conv expects {in_channels} input channels, got {}",
                        in_feat.channels
                    )));
                }
                let padded = in_feat.length + pad_left + pad_right;
                if padded < kernel {
                    return Err(Error::Shape(format!(
                        "conv kernel {kernel} exceeds padded length {padded}"
                    )));
                }
                let out_len = (padded - kernel) / stride + 1;
                let fan_in = in_channels * kernel;
                let fan_out = out_channels * kernel;
                let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
                let w = Tensor::from_vec(
                    &[out_channels, in_channels, kernel],
                    (0..out_channels * in_channels * kernel)
                        .map(|_| rng.next_range(-limit, limit))
                        .collect(),
                )?;
                Ok(Layer {
                    spec,
                    weight: Some(w),
                    bias: Some(Tensor::zeros(&[out_channels])),
                    in_feat,
                    out_feat: Feat {
                        channels: out_channels,
                        length: out_len,
                    },
                })
            }
            LayerSpec::AvgPool1D { size, stride } => {
                if size == 0 || stride == 0 {
                    return Err(Error::InvalidArgument("pool size and stride must be positive".into()));
                }
                if in_feat.length < size {
                    return Err(Error::Shape(format!(
                        "pool size {size} exceeds length {}",
                        in_feat.length
                    )));
                }
                let out_len = (in_feat.length - size) / stride + 1;
                Ok(Layer {
                    spec,
                    weight: None,
                    bias: None,
                    in_feat,
                    out_feat: Feat {
                        channels: in_feat.channels,
                        length: out_len,
                    },
                })
            }
            LayerSpec::Flatten => Ok(Layer {
                spec,
                weight: None,
                bias: None,
                in_feat,
                out_feat: Feat::flat(in_feat.width()),
            }),
            LayerSpec::Reshape { channels } => {
                if channels == 0 || in_feat.width() % channels != 0 {
                    return Err(Error::Shape(format!(
                        "cannot reshape width {} into {channels} channels",
                        in_feat.width()
                    )));
                }
                Ok(Layer {
                    spec,
                    weight: None,
                    bias: None,
                    in_feat,
                    out_feat: Feat {
                        channels,
                        length: in_feat.width() / channels,
                    },
                })
            }
        }
    }

    pub fn activation(&self) -> Activation {
        match self.spec {
            LayerSpec::Dense { activation, .. } | LayerSpec::Conv1D { activation, .. } => activation,
            _ => Activation::None,
        }
    }

    /// Forward pass for a [batch, in_width] tensor.
    pub fn forward(&self, input: &Tensor) -> Result<Tensor> {
        let batch = input.shape()[0];
        debug_assert_eq!(input.shape()[1], self.in_feat.width());
        let mut out = match &self.spec {
            LayerSpec::Dense { input: nin, output: nout, .. } => {
                let w = self.weight.as_ref().unwrap();
                let b = self.bias.as_ref().unwrap();
                let mut out = Tensor::zeros(&[batch, *nout]);
                for r in 0..batch {
                    let x = input.row(r);
                    let o = out.row_mut(r);
                    for j in 0..*nout {
                        o[j] = b.data()[j] + dot(&w.data()[j * nin..(j + 1) * nin], x);
                    }
                }
                out
            }
            LayerSpec::Conv1D {
                in_channels,
                out_channels,
                kernel,
                stride,
                pad_left,
                ..
            } => {
                let w = self.weight.as_ref().unwrap();
                let b = self.bias.as_ref().unwrap();
                let l_in = self.in_feat.length;
                let l_out = self.out_feat.length;
                let mut out = Tensor::zeros(&[batch, self.out_feat.width()]);
                for r in 0..batch {
                    let x = input.row(r);
                    let o = out.row_mut(r);
                    for co in 0..*out_channels {
                        let orow = &mut o[co * l_out..(co + 1) * l_out];
                        orow.fill(b.data()[co]);
                        for ci in 0..*in_channels {
                            let xrow = &x[ci * l_in..(ci + 1) * l_in];
                            let wrow =
                                &w.data()[(co * in_channels + ci) * kernel..(co * in_channels + ci + 1) * kernel];
                            for (i, oval) in orow.iter_mut().enumerate() {
                                let base = i * stride;
                                let mut acc = 0.0;
                                for (t, &wt) in wrow.iter().enumerate() {
                                    let j = base + t;
                                    if j >= *pad_left && j - pad_left < l_in {
                                        acc += wt * xrow[j - pad_left];
                                    }
                                }
                                *oval += acc;
                            }
                        }
                    }
                }
                out
            }
            LayerSpec::AvgPool1D { size, stride } => {
                let l_in = self.in_feat.length;
                let l_out = self.out_feat.length;
                let channels = self.in_feat.channels;
                let inv = 1.0 / *size as f64;
                let mut out = Tensor::zeros(&[batch, self.out_feat.width()]);
                for r in 0..batch {
                    let x = input.row(r);
                    let o = out.row_mut(r);
                    for c in 0..channels {
                        let xrow = &x[c * l_in..(c + 1) * l_in];
                        let orow = &mut o[c * l_out..(c + 1) * l_out];
                        for (i, oval) in orow.iter_mut().enumerate() {
                            let start = i * stride;
                            *oval = xrow[start..start + size].iter().sum::<f64>() * inv;
                        }
                    }
                }
                out
            }
            LayerSpec::Flatten | LayerSpec::Reshape { .. } => {
                let mut t = input.clone();
                // metadata-only: same data, same [batch, width] shape
                debug_assert_eq!(t.shape()[1], self.out_feat.width());
                t.data_mut(); // no-op; keeps clone explicit
                t
            }
        };
        if self.activation() == Activation::Relu {
            for v in out.data_mut() {
                if *v < 0.0 {
                    *v = 0.0;
                }
            }
        }
        Ok(out)
    }

    /// Backward pass. `output` is this layer's forward output (used for the
    /// ReLU mask; the subgradient at 0 is 0), `upstream` is dL/d(output).
    /// Returns (weight grad, bias grad, input grad).
    pub fn backward(
        &self,
        input: &Tensor,
        output: &Tensor,
        upstream: &Tensor,
    ) -> Result<(Option<Tensor>, Option<Tensor>, Tensor)> {
        let batch = input.shape()[0];
        // dL/d(pre-activation)
        let mut delta = upstream.clone();
        if self.activation() == Activation::Relu {
            for (d, &o) in delta.data_mut().iter_mut().zip(output.data()) {
                if o <= 0.0 {
                    *d = 0.0;
                }
            }
        }

        match &self.spec {
            LayerSpec::Dense { input: nin, output: nout, .. } => {
                let w = self.weight.as_ref().unwrap();
                let mut dw = Tensor::zeros(&[*nout, *nin]);
                let mut db = Tensor::zeros(&[*nout]);
                let mut dx = Tensor::zeros(&[batch, *nin]);
                for r in 0..batch {
                    let x = input.row(r);
                    let d = delta.row(r);
                    let gx = dx.row_mut(r);
                    for j in 0..*nout {
                        let dj = d[j];
                        if dj == 0.0 {
                            continue;
                        }
                        db.data_mut()[j] += dj;
                        axpy(&mut dw.data_mut()[j * nin..(j + 1) * nin], dj, x);
                        axpy(gx, dj, &w.data()[j * nin..(j + 1) * nin]);
                    }
                }
                Ok((Some(dw), Some(db), dx))
            }
            LayerSpec::Conv1D {
                in_channels,
                out_channels,
                kernel,
                stride,
                pad_left,
                ..
            } => {
                let w = self.weight.as_ref().unwrap();
                let l_in = self.in_feat.length;
                let l_out = self.out_feat.length;
                let mut dw = Tensor::zeros(&[*out_channels, *in_channels, *kernel]);
                let mut db = Tensor::zeros(&[*out_channels]);
                let mut dx = Tensor::zeros(&[batch, self.in_feat.width()]);
                for r in 0..batch {
                    let x = input.row(r);
                    let d = delta.row(r);
                    let gx = dx.row_mut(r);
                    for co in 0..*out_channels {
                        let drow = &d[co * l_out..(co + 1) * l_out];
                        db.data_mut()[co] += drow.iter().sum::<f64>();
                        for ci in 0..*in_channels {
                            let xrow = &x[ci * l_in..(ci + 1) * l_in];
                            let gxrow = &mut gx[ci * l_in..(ci + 1) * l_in];
                            let widx = (co * in_channels + ci) * kernel;
                            let wrow = &w.data()[widx..widx + kernel];
                            let dwrow = &mut dw.data_mut()[widx..widx + kernel];
                            for (i, &di) in drow.iter().enumerate() {
                                if di == 0.0 {
                                    continue;
                                }
                                let base = i * stride;
                                for t in 0..*kernel {
                                    let j = base + t;
                                    if j >= *pad_left && j - pad_left < l_in {
                                        dwrow[t] += di * xrow[j - pad_left];
                                        gxrow[j - pad_left] += di * wrow[t];
                                    }
                                }
                            }
                        }
                    }
                }
                Ok((Some(dw), Some(db), dx))
            }
            LayerSpec::AvgPool1D { size, stride } => {
                let l_in = self.in_feat.length;
                let l_out = self.out_feat.length;
                let channels = self.in_feat.channels;
                let inv = 1.0 / *size as f64;
                let mut dx = Tensor::zeros(&[batch, self.in_feat.width()]);
                for r in 0..batch {
                    let d = delta.row(r);
                    let gx = dx.row_mut(r);
                    for c in 0..channels {
                        let drow = &d[c * l_out..(c + 1) * l_out];
                        let gxrow = &mut gx[c * l_in..(c + 1) * l_in];
                        for (i, &di) in drow.iter().enumerate() {
                            let start = i * stride;
                            for g in &mut gxrow[start..start + size] {
                                *g += di * inv;
                            }
                        }
                    }
                }
                Ok((None, None, dx))
            }
            LayerSpec::Flatten | LayerSpec::Reshape { .. } => Ok((None, None, delta)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mk(spec: LayerSpec, in_feat: Feat) -> Layer {
        let mut rng = CounterRng::new(1);
        Layer::new(spec, in_feat, &mut rng).unwrap()
    }

    #[test]
    fn dense_identity_passthrough() {
        let mut layer = mk(LayerSpec::dense(3, 3, Activation::None), Feat::flat(3));
        let w = layer.weight.as_mut().unwrap();
        w.fill(0.0);
        for i in 0..3 {
            w.data_mut()[i * 3 + i] = 1.0;
        }
        let x = Tensor::from_vec(&[1, 3], vec![0.5, -1.0, 2.0]).unwrap();
        let y = layer.forward(&x).unwrap();
        assert_eq!(y.data(), x.data());
    }

    #[test]
    fn relu_clamps_negatives() {
        let mut layer = mk(LayerSpec::dense(3, 3, Activation::Relu), Feat::flat(3));
        let w = layer.weight.as_mut().unwrap();
        w.fill(0.0);
        for i in 0..3 {
            w.data_mut()[i * 3 + i] = 1.0;
        }
        let x = Tensor::from_vec(&[1, 3], vec![-1.0, 0.0, 2.0]).unwrap();
        let y = layer.forward(&x).unwrap();
        assert_eq!(y.data(), &[0.0, 0.0, 2.0]);
    }

    #[test]
    fn avg_pool_halves_length() {
        let layer = mk(LayerSpec::pool(), Feat { channels: 1, length: 4 });
        let x = Tensor::from_vec(&[1, 4], vec![1.0, 3.0, 5.0, 7.0]).unwrap();
        let y = layer.forward(&x).unwrap();
        assert_eq!(y.data(), &[2.0, 6.0]);
    }

    #[test]
    fn conv_preserves_length_with_asymmetric_padding() {
        let layer = mk(LayerSpec::conv(1, 2, Activation::None), Feat { channels: 1, length: 8 });
        assert_eq!(layer.out_feat, Feat { channels: 2, length: 8 });
    }

    #[test]
    fn conv_known_kernel() {
        // Single input channel, single output channel, kernel [1,2,3,4].
        let mut layer = mk(
            LayerSpec::conv(1, 1, Activation::None),
            Feat { channels: 1, length: 4 },
        );
        layer.weight = Some(Tensor::from_vec(&[1, 1, 4], vec![1.0, 2.0, 3.0, 4.0]).unwrap());
        layer.bias = Some(Tensor::zeros(&[1]));
        let x = Tensor::from_vec(&[1, 4], vec![1.0, 1.0, 1.0, 1.0]).unwrap();
        let y = layer.forward(&x).unwrap();
        // padded input: [0, 1, 1, 1, 1, 0, 0]
        assert_eq!(y.data(), &[9.0, 10.0, 6.0, 3.0]);
    }

    #[test]
    fn reshape_and_flatten_are_metadata_only() {
        let r = mk(LayerSpec::Reshape { channels: 2 }, Feat::flat(8));
        assert_eq!(r.out_feat, Feat { channels: 2, length: 4 });
        let f = mk(LayerSpec::Flatten, Feat { channels: 2, length: 4 });
        assert_eq!(f.out_feat, Feat::flat(8));
        let x = Tensor::from_vec(&[1, 8], (0..8).map(|i| i as f64).collect()).unwrap();
        assert_eq!(r.forward(&x).unwrap().data(), x.data());
    }
}
