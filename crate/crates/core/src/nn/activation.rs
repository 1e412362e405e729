//! Element-wise activation functions and their derivatives.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Scale constants of the self-normalising exponential linear unit.
const SELU_LAMBDA: f64 = 1.050_700_987_355_480_5;
const SELU_ALPHA: f64 = 1.673_263_242_354_377_2;

/// Negative-side slope of the leaky rectifier.
pub const LEAKY_RELU_ALPHA: f64 = 0.01;

/// Element-wise activation kinds supported by the layer stack.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    /// Identity (used by dense rows that specify no activation).
    Linear,
    Relu,
    /// `x` for `x > 0`, [`LEAKY_RELU_ALPHA`]` * x` otherwise.
    LeakyRelu,
    Selu,
    Sigmoid,
    Tanh,
}

impl Activation {
    /// Applies the activation element-wise.
    pub fn apply(&self, input: &Tensor) -> Tensor {
        match self {
            Activation::Linear => input.clone(),
            Activation::Relu => input.map(|x| if x > 0.0 { x } else { 0.0 }),
            Activation::LeakyRelu => {
                input.map(|x| if x > 0.0 { x } else { LEAKY_RELU_ALPHA * x })
            }
            Activation::Selu => input.map(|x| {
                if x > 0.0 {
                    SELU_LAMBDA * x
                } else {
                    SELU_LAMBDA * SELU_ALPHA * (x.exp() - 1.0)
                }
            }),
            Activation::Sigmoid => input.map(sigmoid),
            Activation::Tanh => input.map(f64::tanh),
        }
    }

    /// Chain-rule step: `dx = dy * f'(x)`. `output` must be the tensor the
    /// forward pass produced for `input`; sigmoid/tanh derivatives reuse it.
    ///
    /// At the kink (`x == 0`) the rectifier family takes the negative-side
    /// derivative of zero (ReLU) / `alpha` (leaky).
    pub fn backward(&self, input: &Tensor, output: &Tensor, dy: &Tensor) -> Result<Tensor> {
        if dy.shape() != input.shape() {
            return Err(Error::shape(format!(
                "activation backward: gradient shape {:?} does not match input {:?}",
                dy.shape(),
                input.shape()
            )));
        }
        let x = input.data();
        let y = output.data();
        let g = dy.data();
        let mut dx = vec![0.0; g.len()];
        match self {
            Activation::Linear => dx.copy_from_slice(g),
            Activation::Relu => {
                for i in 0..g.len() {
                    dx[i] = if x[i] > 0.0 { g[i] } else { 0.0 };
                }
            }
            Activation::LeakyRelu => {
                for i in 0..g.len() {
                    dx[i] = if x[i] > 0.0 { g[i] } else { LEAKY_RELU_ALPHA * g[i] };
                }
            }
            Activation::Selu => {
                for i in 0..g.len() {
                    let d = if x[i] > 0.0 {
                        SELU_LAMBDA
                    } else {
                        // f(x) + λα for x ≤ 0, expressed via the cached output.
                        y[i] + SELU_LAMBDA * SELU_ALPHA
                    };
                    dx[i] = g[i] * d;
                }
            }
            Activation::Sigmoid => {
                for i in 0..g.len() {
                    dx[i] = g[i] * y[i] * (1.0 - y[i]);
                }
            }
            Activation::Tanh => {
                for i in 0..g.len() {
                    dx[i] = g[i] * (1.0 - y[i] * y[i]);
                }
            }
        }
        Tensor::from_shape_vec(input.shape(), dx)
    }
}

/// Numerically stable logistic function.
pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Activation::Linear => write!(f, "linear"),
            Activation::Relu => write!(f, "relu"),
            Activation::LeakyRelu => write!(f, "leaky_relu"),
            Activation::Selu => write!(f, "selu"),
            Activation::Sigmoid => write!(f, "sigmoid"),
            Activation::Tanh => write!(f, "tanh"),
        }
    }
}

impl FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "linear" => Ok(Activation::Linear),
            "relu" => Ok(Activation::Relu),
            "leaky_relu" | "leaky-relu" | "leakyrelu" => Ok(Activation::LeakyRelu),
            "selu" => Ok(Activation::Selu),
            "sigmoid" => Ok(Activation::Sigmoid),
            "tanh" => Ok(Activation::Tanh),
            other => Err(Error::config(format!("unknown activation '{other}'"))),
        }
    }
}
