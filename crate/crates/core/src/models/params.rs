//! Parameter storage for a model instance.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::init::{conv_init, dense_init, lstm_init};
use crate::rng::derived_rng;
use crate::tensor::Tensor;

use super::{output_shapes, LayerSpec, ModelSpec};

/// Trainable tensors of one layer, aligned with its [`LayerSpec`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum LayerParams {
    /// Dropout, pooling, flatten: nothing to train.
    None,
    Conv { kernels: Tensor, bias: Tensor },
    Dense { weights: Tensor, bias: Tensor },
    Lstm {
        w_input: Tensor,
        w_recurrent: Tensor,
        bias: Tensor,
    },
}

/// All parameters of a model, one entry per spec layer.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub layers: Vec<LayerParams>,
}

impl ModelParams {
    /// Initialises parameters for `spec` applied to `samples × channels`
    /// input. Weight matrices are Glorot-uniform; LSTM recurrent weights are
    /// uniform `±1/√units` with the forget-gate bias block set to one.
    /// Layer `i` draws from an RNG derived as `(seed, "init", i)`, so two
    /// models initialised with the same seed agree layer by layer.
    pub fn init(spec: &ModelSpec, samples: usize, channels: usize, seed: u64) -> Result<Self> {
        let shapes = output_shapes(spec, samples, channels)?;
        let mut in_shape: Vec<usize> = vec![samples, channels];
        let mut layers = Vec::with_capacity(spec.layers.len());
        for (i, layer) in spec.layers.iter().enumerate() {
            let mut rng = derived_rng(seed, "init", i as u64);
            let p = match *layer {
                LayerSpec::Conv1d {
                    filters, kernel, ..
                } => {
                    let (kernels, bias) = conv_init(&mut rng, filters, kernel, in_shape[1]);
                    LayerParams::Conv { kernels, bias }
                }
                LayerSpec::Dense { units, .. } => {
                    let (weights, bias) = dense_init(&mut rng, units, in_shape[0]);
                    LayerParams::Dense { weights, bias }
                }
                LayerSpec::Lstm { units, .. } => {
                    let lp = lstm_init(&mut rng, units, in_shape[1]);
                    LayerParams::Lstm {
                        w_input: lp.w_input,
                        w_recurrent: lp.w_recurrent,
                        bias: lp.bias,
                    }
                }
                LayerSpec::Dropout { .. } | LayerSpec::MaxPool1d { .. } | LayerSpec::Flatten => {
                    LayerParams::None
                }
            };
            layers.push(p);
            in_shape = shapes[i].clone();
        }
        Ok(ModelParams { layers })
    }

    /// Flat list of trainable tensors in layer order, each flagged as a
    /// weight matrix (`true`, subject to L2) or a bias (`false`). This order
    /// defines the optimizer state and checkpoint layout.
    pub fn flat(&self) -> Vec<(&Tensor, bool)> {
        let mut out = Vec::new();
        for layer in &self.layers {
            match layer {
                LayerParams::None => {}
                LayerParams::Conv { kernels, bias } => {
                    out.push((kernels, true));
                    out.push((bias, false));
                }
                LayerParams::Dense { weights, bias } => {
                    out.push((weights, true));
                    out.push((bias, false));
                }
                LayerParams::Lstm {
                    w_input,
                    w_recurrent,
                    bias,
                } => {
                    out.push((w_input, true));
                    out.push((w_recurrent, true));
                    out.push((bias, false));
                }
            }
        }
        out
    }

    /// Mutable counterpart of [`ModelParams::flat`], same order.
    pub fn flat_mut(&mut self) -> Vec<(&mut Tensor, bool)> {
        let mut out = Vec::new();
        for layer in &mut self.layers {
            match layer {
                LayerParams::None => {}
                LayerParams::Conv { kernels, bias } => {
                    out.push((kernels, true));
                    out.push((bias, false));
                }
                LayerParams::Dense { weights, bias } => {
                    out.push((weights, true));
                    out.push((bias, false));
                }
                LayerParams::Lstm {
                    w_input,
                    w_recurrent,
                    bias,
                } => {
                    out.push((w_input, true));
                    out.push((w_recurrent, true));
                    out.push((bias, false));
                }
            }
        }
        out
    }

    /// Total scalar parameter count.
    pub fn numel(&self) -> usize {
        self.flat().iter().map(|(t, _)| t.numel()).sum()
    }

    /// Sum of squared weight-matrix norms, `Σ‖w‖²` (biases excluded).
    pub fn squared_weight_norm(&self) -> f64 {
        self.flat()
            .iter()
            .filter(|(_, is_weight)| *is_weight)
            .map(|(t, _)| t.squared_norm())
            .sum()
    }

    pub fn all_finite(&self) -> bool {
        self.flat().iter().all(|(t, _)| t.all_finite())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{build, ModelName};
    use crate::nn::Activation;

    #[test]
    fn shapes_follow_the_stack() {
        let spec = build(ModelName::CnnLstm2, Activation::Relu);
        let p = ModelParams::init(&spec, 500, 19, 3).unwrap();
        assert_eq!(p.layers.len(), spec.layers.len());
        match &p.layers[0] {
            LayerParams::Conv { kernels, bias } => {
                assert_eq!(kernels.shape(), &[64, 3, 19]);
                assert_eq!(bias.shape(), &[64]);
            }
            other => panic!("layer 0: {other:?}"),
        }
        match &p.layers[1] {
            LayerParams::Conv { kernels, .. } => assert_eq!(kernels.shape(), &[64, 3, 64]),
            other => panic!("layer 1: {other:?}"),
        }
        match &p.layers[5] {
            LayerParams::Lstm {
                w_input,
                w_recurrent,
                bias,
            } => {
                assert_eq!(w_input.shape(), &[400, 64]);
                assert_eq!(w_recurrent.shape(), &[400, 100]);
                assert_eq!(bias.shape(), &[400]);
            }
            other => panic!("layer 5: {other:?}"),
        }
        match &p.layers[7] {
            LayerParams::Dense { weights, .. } => assert_eq!(weights.shape(), &[100, 100]),
            other => panic!("layer 7: {other:?}"),
        }
        assert!(p.all_finite());
        assert!(p.squared_weight_norm() > 0.0);
    }

    #[test]
    fn dense_width_after_flatten_matches_oracle() {
        let spec = build(ModelName::Cnn1, Activation::Relu);
        let p = ModelParams::init(&spec, 500, 19, 0).unwrap();
        match &p.layers[5] {
            LayerParams::Dense { weights, .. } => {
                assert_eq!(weights.shape(), &[100, 31680]);
            }
            other => panic!("{other:?}"),
        }
        match &p.layers[7] {
            LayerParams::Dense { weights, .. } => assert_eq!(weights.shape(), &[2, 100]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn init_is_deterministic_per_seed() {
        let spec = build(ModelName::Lstm1, Activation::Relu);
        let a = ModelParams::init(&spec, 100, 4, 11).unwrap();
        let b = ModelParams::init(&spec, 100, 4, 11).unwrap();
        let c = ModelParams::init(&spec, 100, 4, 12).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn flat_order_interleaves_weights_and_biases() {
        let spec = build(ModelName::Lstm1, Activation::Relu);
        let mut p = ModelParams::init(&spec, 50, 3, 0).unwrap();
        let flags: Vec<bool> = p.flat().iter().map(|(_, w)| *w).collect();
        // lstm (w, w, b), dense (w, b), dense (w, b)
        assert_eq!(flags, [true, true, false, true, false, true, false]);
        assert_eq!(p.numel(), p.flat_mut().iter().map(|(t, _)| t.numel()).sum::<usize>());
    }
}
