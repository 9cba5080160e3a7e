//! The seven-parameter identity-fitting experiment: a 1 -> 2(ReLU) -> 1
//! network trained to reproduce f(x) = x on [-1, 1]. Small enough to study
//! exactly, and a reliable demonstration that trained networks should not be
//! trusted outside the training domain.

use crate::error::Result;
use crate::nn::adam::{adam_step, AdamConfig, AdamState};
use crate::nn::layers::{Activation, LayerSpec};
use crate::nn::network::Network;
use crate::nn::tensor::Tensor;
use crate::numerics::rng::CounterRng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdentityTrial {
    /// Final mean squared error over the training points in [-1, 1].
    pub in_domain_mse: f64,
    /// The trained network evaluated at x = 2 (true identity gives 2).
    pub value_at_2: f64,
}

const TRAIN_POINTS: usize = 1000;
const STEPS: usize = 2000;

/// Run `trials` independent trainings of the seven-parameter network.
pub fn demo_identity(seed: u64, trials: usize) -> Result<Vec<IdentityTrial>> {
    let mut out = Vec::with_capacity(trials);
    for trial in 0..trials {
        let mut rng = CounterRng::stream(seed, trial as u64);
        let xs: Vec<f64> = (0..TRAIN_POINTS)
            .map(|_| rng.next_range(-1.0, 1.0))
            .collect();
        let batch = Tensor::from_vec(&[TRAIN_POINTS, 1], xs.clone())?;
        let targets = &xs;

        let mut net = seven_parameter_network(&mut rng)?;
        let cfg = AdamConfig {
            learning_rate: 0.02,
            ..AdamConfig::default()
        };
        let mut state = AdamState::for_params(&net.params(), cfg);
        let names = net.param_names("identity");

        for _ in 0..STEPS {
            let (pred, cache) = net.forward(&batch)?;
            // d/dpred of mean squared error
            let scale = 2.0 / TRAIN_POINTS as f64;
            let upstream = Tensor::from_vec(
                &[TRAIN_POINTS, 1],
                pred.data()
                    .iter()
                    .zip(targets)
                    .map(|(&p, &t)| scale * (p - t))
                    .collect(),
            )?;
            let (grads, _) = net.backward(&cache, &upstream)?;
            adam_step(&mut net.params_mut(), &grads, &names, &mut state)?;
        }

        let (pred, _) = net.forward(&batch)?;
        let mse = pred
            .data()
            .iter()
            .zip(targets)
            .map(|(&p, &t)| (p - t) * (p - t))
            .sum::<f64>()
            / TRAIN_POINTS as f64;
        let value_at_2 = eval_scalar(&net, 2.0)?;
        out.push(IdentityTrial {
            in_domain_mse: mse,
            value_at_2,
        });
    }
    Ok(out)
}

/// The 1 -> 2(ReLU) -> 1 architecture with biases: seven parameters.
pub fn seven_parameter_network(rng: &mut CounterRng) -> Result<Network> {
    Network::new(
        1,
        vec![
            LayerSpec::dense(1, 2, Activation::Relu),
            LayerSpec::dense(2, 1, Activation::None),
        ],
        false,
        rng,
    )
}

/// Hand-set parameters that realize the identity on all reals:
/// relu(x) - relu(-x) = x.
pub fn hand_set_identity_network() -> Result<Network> {
    let mut rng = CounterRng::new(0);
    let mut net = seven_parameter_network(&mut rng)?;
    {
        let mut params = net.params_mut();
        // hidden weights [2,1]
        params[0].data_mut().copy_from_slice(&[1.0, -1.0]);
        // hidden biases [2]
        params[1].fill(0.0);
        // output weights [1,2]
        params[2].data_mut().copy_from_slice(&[1.0, -1.0]);
        // output bias [1]
        params[3].fill(0.0);
    }
    Ok(net)
}

pub fn eval_scalar(net: &Network, x: f64) -> Result<f64> {
    let input = Tensor::from_vec(&[1, 1], vec![x])?;
    let (out, _) = net.forward(&input)?;
    Ok(out.data()[0])
}
