//! Finite-difference certification of every layer type and of composed
//! networks, including the residual wrapper. The oracle only re-runs the
//! forward pass; it never touches the backward code it is checking.

mod common;

use common::{assert_gradients_match, H};
use koopnet::nn::gradcheck::finite_difference;
use koopnet::nn::{Activation, LayerSpec, Network, Tensor};
use koopnet::numerics::CounterRng;

/// MSE of the network output against a fixed target.
fn loss(net: &Network, x: &Tensor, target: &[f64]) -> f64 {
    let (out, _) = net.forward(x).unwrap();
    out.data()
        .iter()
        .zip(target)
        .map(|(&o, &t)| (o - t) * (o - t))
        .sum::<f64>()
        / target.len() as f64
}

fn upstream_for(net: &Network, x: &Tensor, target: &[f64]) -> (Tensor, koopnet::nn::ForwardCache) {
    let (out, cache) = net.forward(x).unwrap();
    let scale = 2.0 / target.len() as f64;
    let up = Tensor::from_vec(
        out.shape(),
        out.data()
            .iter()
            .zip(target)
            .map(|(&o, &t)| scale * (o - t))
            .collect(),
    )
    .unwrap();
    (up, cache)
}

/// Flatten parameters, compare analytic vs central-difference gradients at
/// several random points, and also check the input gradient.
fn certify(mut net: Network, batch: usize, points: usize, seed: u64) {
    let in_w = net.input_width();
    let out_w = net.output_width();
    let mut rng = CounterRng::new(seed);

    for point in 0..points {
        // Random parameters keep ReLU kinks away from systematic zeros.
        for p in net.params_mut() {
            for v in p.data_mut() {
                *v = rng.next_range(-0.7, 0.7);
            }
        }
        let x = Tensor::from_vec(
            &[batch, in_w],
            (0..batch * in_w).map(|_| rng.next_range(-1.0, 1.0)).collect(),
        )
        .unwrap();
        let target: Vec<f64> = (0..batch * out_w).map(|_| rng.next_range(-1.0, 1.0)).collect();

        let (up, cache) = upstream_for(&net, &x, &target);
        let (grads, dx) = net.backward(&cache, &up).unwrap();
        let analytic: Vec<f64> = grads.iter().flat_map(|g| g.data().iter().copied()).collect();

        // Parameter gradients.
        let flat: Vec<f64> = net.params().iter().flat_map(|p| p.data().iter().copied()).collect();
        let shapes: Vec<Vec<usize>> = net.params().iter().map(|p| p.shape().to_vec()).collect();
        let net_ref = &net;
        let numeric = finite_difference(
            |theta: &[f64]| {
                let mut trial = net_ref.clone();
                let mut offset = 0;
                for (p, shape) in trial.params_mut().into_iter().zip(&shapes) {
                    let len: usize = shape.iter().product();
                    p.data_mut().copy_from_slice(&theta[offset..offset + len]);
                    offset += len;
                }
                loss(&trial, &x, &target)
            },
            &flat,
            H,
        );
        assert_gradients_match(&analytic, &numeric, &format!("params at point {point}"));

        // Input gradient.
        let numeric_dx = finite_difference(
            |xs: &[f64]| {
                let xt = Tensor::from_vec(&[batch, in_w], xs.to_vec()).unwrap();
                loss(net_ref, &xt, &target)
            },
            x.data(),
            H,
        );
        assert_gradients_match(dx.data(), &numeric_dx, &format!("input at point {point}"));
    }
}

fn new_net(input: usize, specs: Vec<LayerSpec>, residual: bool) -> Network {
    let mut rng = CounterRng::new(7);
    Network::new(input, specs, residual, &mut rng).unwrap()
}

#[test]
fn dense_linear() {
    certify(new_net(5, vec![LayerSpec::dense(5, 4, Activation::None)], false), 3, 10, 101);
}

#[test]
fn dense_relu() {
    certify(new_net(5, vec![LayerSpec::dense(5, 6, Activation::Relu)], false), 3, 10, 102);
}

#[test]
fn conv_with_padding() {
    certify(
        new_net(
            8,
            vec![LayerSpec::Reshape { channels: 1 }, LayerSpec::conv(1, 3, Activation::Relu), LayerSpec::Flatten],
            false,
        ),
        2,
        10,
        103,
    );
}

#[test]
fn conv_multichannel() {
    certify(
        new_net(
            16,
            vec![
                LayerSpec::Reshape { channels: 2 },
                LayerSpec::conv(2, 4, Activation::None),
                LayerSpec::Flatten,
            ],
            false,
        ),
        2,
        10,
        104,
    );
}

#[test]
fn avg_pool() {
    certify(
        new_net(
            12,
            vec![LayerSpec::Reshape { channels: 2 }, LayerSpec::pool(), LayerSpec::Flatten],
            false,
        ),
        3,
        10,
        105,
    );
}

#[test]
fn residual_mlp() {
    certify(
        new_net(
            6,
            vec![
                LayerSpec::dense(6, 8, Activation::Relu),
                LayerSpec::dense(8, 6, Activation::None),
            ],
            true,
        ),
        3,
        10,
        106,
    );
}

#[test]
fn conv_stack_like_outer_net() {
    // Miniature of the convolutional outer net: conv/pool pairs, then dense.
    certify(
        new_net(
            16,
            vec![
                LayerSpec::Reshape { channels: 1 },
                LayerSpec::conv(1, 4, Activation::Relu),
                LayerSpec::pool(),
                LayerSpec::conv(4, 8, Activation::Relu),
                LayerSpec::pool(),
                LayerSpec::Flatten,
                LayerSpec::dense(32, 12, Activation::Relu),
                LayerSpec::dense(12, 16, Activation::None),
            ],
            true,
        ),
        2,
        5,
        107,
    );
}
