//! Weight initialisation schemes.

use rand::Rng as _;

use crate::nn::LstmParams;
use crate::rng::Rng;
use crate::tensor::Tensor;

/// Glorot/Xavier uniform draw on `[-limit, limit]` with
/// `limit = sqrt(6 / (fan_in + fan_out))`.
pub fn glorot_uniform(rng: &mut Rng, shape: &[usize], fan_in: usize, fan_out: usize) -> Tensor {
    let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
    uniform(rng, shape, limit)
}

/// Uniform draw on `[-limit, limit]`.
pub fn uniform(rng: &mut Rng, shape: &[usize], limit: f64) -> Tensor {
    let n: usize = shape.iter().product();
    let data = (0..n).map(|_| rng.gen_range(-limit..limit)).collect();
    Tensor::from_shape_vec(shape, data).expect("shape/product mismatch is impossible here")
}

/// Convolution kernels `[filters, width, channels]`: Glorot with
/// `fan_in = width*channels`, `fan_out = width*filters`; zero bias.
pub fn conv_init(rng: &mut Rng, filters: usize, width: usize, channels: usize) -> (Tensor, Tensor) {
    let kernels = glorot_uniform(
        rng,
        &[filters, width, channels],
        width * channels,
        width * filters,
    );
    (kernels, Tensor::zeros(&[filters]))
}

/// Dense weights `[units, features]`: Glorot over the matrix dims; zero bias.
pub fn dense_init(rng: &mut Rng, units: usize, features: usize) -> (Tensor, Tensor) {
    let weights = glorot_uniform(rng, &[units, features], features, units);
    (weights, Tensor::zeros(&[units]))
}

/// LSTM parameters: Glorot input weights (`fan_in = features`,
/// `fan_out = 4*units`), scaled-uniform recurrent weights
/// (`limit = 1/sqrt(units)`), zero bias except the forget-gate block, which
/// starts at one so that early training retains cell state.
pub fn lstm_init(rng: &mut Rng, units: usize, features: usize) -> LstmParams {
    let w_input = glorot_uniform(rng, &[4 * units, features], features, 4 * units);
    let w_recurrent = uniform(rng, &[4 * units, units], 1.0 / (units as f64).sqrt());
    let mut bias = Tensor::zeros(&[4 * units]);
    for j in units..2 * units {
        bias.data_mut()[j] = 1.0;
    }
    LstmParams {
        w_input,
        w_recurrent,
        bias,
    }
}
