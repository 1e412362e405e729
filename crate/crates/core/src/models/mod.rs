//! The seven sequence-classification architectures: declarative layer
//! stacks, shape algebra, parameter initialisation, forward graphs, the
//! training loop, and checkpoints.
//!
//! Layer stacks are fixed data (see [`build`]); the only free choices are
//! the hidden activation applied to convolutional rows, the L2 coefficient,
//! and the training hyperparameters. Dense rows keep their printed
//! activation: rows specified with ReLU stay ReLU under every hidden
//! activation, rows specified without one are linear, and every output head
//! is a sigmoid dense layer (two units for CNN-1, one unit elsewhere).

mod checkpoint;
mod forward;
mod params;
mod train;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::Activation;

pub use checkpoint::{load_checkpoint, save_checkpoint, CheckpointMeta};
pub use forward::{forward_batch, predict_frame, predict_scores, BatchGraph, Prediction};
pub use params::{LayerParams, ModelParams};
pub use train::{train, EpochStats, TrainConfig, TrainedModel};

/// The seven architectures, in canonical reporting order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ModelName {
    #[serde(rename = "CNN-1")]
    Cnn1,
    #[serde(rename = "CNN-2")]
    Cnn2,
    #[serde(rename = "CNN-3")]
    Cnn3,
    #[serde(rename = "LSTM-1")]
    Lstm1,
    #[serde(rename = "LSTM-2")]
    Lstm2,
    #[serde(rename = "CNN-LSTM-1")]
    CnnLstm1,
    #[serde(rename = "CNN-LSTM-2")]
    CnnLstm2,
}

pub const ALL_MODELS: [ModelName; 7] = [
    ModelName::Cnn1,
    ModelName::Cnn2,
    ModelName::Cnn3,
    ModelName::Lstm1,
    ModelName::Lstm2,
    ModelName::CnnLstm1,
    ModelName::CnnLstm2,
];

impl ModelName {
    pub fn as_str(&self) -> &'static str {
        match self {
            ModelName::Cnn1 => "CNN-1",
            ModelName::Cnn2 => "CNN-2",
            ModelName::Cnn3 => "CNN-3",
            ModelName::Lstm1 => "LSTM-1",
            ModelName::Lstm2 => "LSTM-2",
            ModelName::CnnLstm1 => "CNN-LSTM-1",
            ModelName::CnnLstm2 => "CNN-LSTM-2",
        }
    }
}

impl fmt::Display for ModelName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key: String = s
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .map(|c| c.to_ascii_lowercase())
            .collect();
        match key.as_str() {
            "cnn1" => Ok(ModelName::Cnn1),
            "cnn2" => Ok(ModelName::Cnn2),
            "cnn3" => Ok(ModelName::Cnn3),
            "lstm1" => Ok(ModelName::Lstm1),
            "lstm2" => Ok(ModelName::Lstm2),
            "cnnlstm1" => Ok(ModelName::CnnLstm1),
            "cnnlstm2" => Ok(ModelName::CnnLstm2),
            _ => Err(Error::config(format!("unknown model '{s}'"))),
        }
    }
}

/// One architecture row. Parameters are present exactly for the row kind.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LayerSpec {
    Conv1d {
        filters: usize,
        kernel: usize,
        stride: usize,
        activation: Activation,
    },
    Dropout {
        rate: f64,
    },
    MaxPool1d {
        window: usize,
        stride: usize,
    },
    Flatten,
    Dense {
        units: usize,
        activation: Activation,
    },
    Lstm {
        units: usize,
        return_sequence: bool,
    },
}

/// A named, fully specified layer stack.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub name: ModelName,
    pub layers: Vec<LayerSpec>,
    /// The hidden activation applied to the convolutional rows.
    pub activation: Activation,
    /// Coefficient of the `l2 * Σ‖w‖²` weight penalty (weights only, not
    /// biases), applied to every convolutional, LSTM, and dense layer.
    pub l2_coeff: f64,
}

/// Default L2 weight-regularisation coefficient.
pub const DEFAULT_L2_COEFF: f64 = 0.01;

/// Constructs the layer stack for `name` with the given hidden activation
/// on its convolutional rows.
pub fn build(name: ModelName, activation: Activation) -> ModelSpec {
    use Activation::{Linear, Relu, Sigmoid};

    let conv = |a: Activation| LayerSpec::Conv1d {
        filters: 64,
        kernel: 3,
        stride: 1,
        activation: a,
    };
    let drop = |rate: f64| LayerSpec::Dropout { rate };
    let pool = LayerSpec::MaxPool1d { window: 2, stride: 1 };
    let dense = |units: usize, a: Activation| LayerSpec::Dense { units, activation: a };
    let lstm = |units: usize, return_sequence: bool| LayerSpec::Lstm {
        units,
        return_sequence,
    };

    let layers = match name {
        ModelName::Cnn1 => vec![
            conv(activation),
            conv(activation),
            drop(0.25),
            pool,
            LayerSpec::Flatten,
            dense(100, Linear),
            drop(0.25),
            dense(2, Sigmoid),
        ],
        ModelName::Cnn2 => vec![
            conv(activation),
            drop(0.5),
            conv(activation),
            drop(0.5),
            conv(activation),
            drop(0.5),
            pool,
            LayerSpec::Flatten,
            dense(100, Relu),
            drop(0.25),
            dense(1, Sigmoid),
        ],
        ModelName::Cnn3 => vec![
            conv(activation),
            conv(activation),
            drop(0.5),
            pool,
            LayerSpec::Flatten,
            dense(100, Relu),
            drop(0.25),
            dense(50, Relu),
            drop(0.25),
            dense(1, Sigmoid),
        ],
        ModelName::Lstm1 => vec![
            lstm(100, false),
            drop(0.5),
            dense(100, Relu),
            drop(0.25),
            dense(1, Sigmoid),
        ],
        ModelName::Lstm2 => vec![
            lstm(100, true),
            lstm(50, false),
            drop(0.5),
            dense(100, Relu),
            drop(0.25),
            dense(1, Sigmoid),
        ],
        ModelName::CnnLstm1 => vec![
            conv(activation),
            conv(activation),
            drop(0.5),
            pool,
            LayerSpec::Flatten,
            lstm(100, false),
            drop(0.5),
            dense(100, Linear),
            drop(0.25),
            dense(1, Sigmoid),
        ],
        ModelName::CnnLstm2 => vec![
            conv(activation),
            conv(activation),
            drop(0.5),
            pool,
            LayerSpec::Flatten,
            lstm(100, false),
            drop(0.5),
            dense(100, Linear),
            drop(0.25),
            dense(50, Relu),
            drop(0.25),
            dense(1, Sigmoid),
        ],
    };

    ModelSpec {
        name,
        layers,
        activation,
        l2_coeff: DEFAULT_L2_COEFF,
    }
}

impl ModelSpec {
    /// Width of the sigmoid output head (2 for CNN-1, otherwise 1).
    pub fn head_units(&self) -> usize {
        match self.layers.last() {
            Some(LayerSpec::Dense { units, .. }) => *units,
            _ => 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.l2_coeff >= 0.0) {
            return Err(Error::config(format!(
                "l2 coefficient must be non-negative, got {}",
                self.l2_coeff
            )));
        }
        match self.layers.last() {
            Some(LayerSpec::Dense {
                activation: Activation::Sigmoid,
                units,
            }) if *units >= 1 => Ok(()),
            other => Err(Error::config(format!(
                "model must end in a sigmoid dense head, found {other:?}"
            ))),
        }
    }
}

/// True when the flatten row at `index` sits in front of an LSTM (possibly
/// with dropout rows between). The printed flatten is then a layout marker,
/// not a reshape: the pooled `[t, filters]` sequence continues unchanged
/// into the LSTM as a `filters`-feature sequence.
pub(crate) fn flatten_feeds_lstm(layers: &[LayerSpec], index: usize) -> bool {
    for layer in &layers[index + 1..] {
        match layer {
            LayerSpec::Dropout { .. } => continue,
            LayerSpec::Lstm { .. } => return true,
            _ => return false,
        }
    }
    false
}

/// The sample-level (no batch axis) output shape of every layer for an
/// input of `samples × channels`. Fails when a window outgrows its input.
pub fn output_shapes(
    spec: &ModelSpec,
    samples: usize,
    channels: usize,
) -> Result<Vec<Vec<usize>>> {
    let mut shape = vec![samples, channels];
    let mut out = Vec::with_capacity(spec.layers.len());
    for (i, layer) in spec.layers.iter().enumerate() {
        shape = match *layer {
            LayerSpec::Conv1d {
                filters,
                kernel,
                stride,
                ..
            } => {
                let [t, _] = sequence_dims(&shape, "conv1d")?;
                vec![window_count(t, kernel, stride, "conv1d")?, filters]
            }
            LayerSpec::MaxPool1d { window, stride } => {
                let [t, c] = sequence_dims(&shape, "max pooling")?;
                vec![window_count(t, window, stride, "max pooling")?, c]
            }
            LayerSpec::Dropout { .. } => shape,
            LayerSpec::Flatten => {
                if flatten_feeds_lstm(&spec.layers, i) {
                    shape
                } else {
                    vec![shape.iter().product()]
                }
            }
            LayerSpec::Dense { units, .. } => {
                if shape.len() != 1 {
                    return Err(Error::shape(format!(
                        "dense layer {i} needs a flat vector, got {shape:?}"
                    )));
                }
                vec![units]
            }
            LayerSpec::Lstm {
                units,
                return_sequence,
            } => {
                let [t, _] = sequence_dims(&shape, "lstm")?;
                if return_sequence {
                    vec![t, units]
                } else {
                    vec![units]
                }
            }
        };
        out.push(shape.clone());
    }
    Ok(out)
}

fn sequence_dims(shape: &[usize], what: &str) -> Result<[usize; 2]> {
    match shape {
        [t, c] => Ok([*t, *c]),
        other => Err(Error::shape(format!(
            "{what} needs a [time, channels] sequence, got {other:?}"
        ))),
    }
}

fn window_count(t: usize, window: usize, stride: usize, what: &str) -> Result<usize> {
    if window == 0 || stride == 0 || window > t {
        return Err(Error::shape(format!(
            "{what}: window {window} stride {stride} does not fit length {t}"
        )));
    }
    Ok((t - window) / stride + 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Textual rendering used by the golden-table test: one row per layer in
    /// the published order, `act=*` marking the variable hidden activation.
    fn render(layer: &LayerSpec) -> String {
        match *layer {
            LayerSpec::Conv1d {
                filters,
                kernel,
                stride,
                ..
            } => format!("conv1d f={filters} k={kernel} s={stride} act=*"),
            LayerSpec::Dropout { rate } => format!("dropout rate={rate}"),
            LayerSpec::MaxPool1d { window, stride } => {
                format!("maxpool k={window} s={stride}")
            }
            LayerSpec::Flatten => "flatten".to_string(),
            LayerSpec::Dense { units, activation } => {
                format!("dense u={units} act={activation}")
            }
            LayerSpec::Lstm {
                units,
                return_sequence,
            } => format!("lstm u={units} seq={return_sequence}"),
        }
    }

    /// The published row sequences, transcribed layer by layer. The leading
    /// input row carries no computation and is represented by the stack's
    /// input, so each listing here is the published row count minus one.
    fn golden_rows(name: ModelName) -> Vec<&'static str> {
        match name {
            ModelName::Cnn1 => vec![
                "conv1d f=64 k=3 s=1 act=*",
                "conv1d f=64 k=3 s=1 act=*",
                "dropout rate=0.25",
                "maxpool k=2 s=1",
                "flatten",
                "dense u=100 act=linear",
                "dropout rate=0.25",
                "dense u=2 act=sigmoid",
            ],
            ModelName::Cnn2 => vec![
                "conv1d f=64 k=3 s=1 act=*",
                "dropout rate=0.5",
                "conv1d f=64 k=3 s=1 act=*",
                "dropout rate=0.5",
                "conv1d f=64 k=3 s=1 act=*",
                "dropout rate=0.5",
                "maxpool k=2 s=1",
                "flatten",
                "dense u=100 act=relu",
                "dropout rate=0.25",
                "dense u=1 act=sigmoid",
            ],
            ModelName::Cnn3 => vec![
                "conv1d f=64 k=3 s=1 act=*",
                "conv1d f=64 k=3 s=1 act=*",
                "dropout rate=0.5",
                "maxpool k=2 s=1",
                "flatten",
                "dense u=100 act=relu",
                "dropout rate=0.25",
                "dense u=50 act=relu",
                "dropout rate=0.25",
                "dense u=1 act=sigmoid",
            ],
            ModelName::Lstm1 => vec![
                "lstm u=100 seq=false",
                "dropout rate=0.5",
                "dense u=100 act=relu",
                "dropout rate=0.25",
                "dense u=1 act=sigmoid",
            ],
            ModelName::Lstm2 => vec![
                "lstm u=100 seq=true",
                "lstm u=50 seq=false",
                "dropout rate=0.5",
                "dense u=100 act=relu",
                "dropout rate=0.25",
                "dense u=1 act=sigmoid",
            ],
            ModelName::CnnLstm1 => vec![
                "conv1d f=64 k=3 s=1 act=*",
                "conv1d f=64 k=3 s=1 act=*",
                "dropout rate=0.5",
                "maxpool k=2 s=1",
                "flatten",
                "lstm u=100 seq=false",
                "dropout rate=0.5",
                "dense u=100 act=linear",
                "dropout rate=0.25",
                "dense u=1 act=sigmoid",
            ],
            ModelName::CnnLstm2 => vec![
                "conv1d f=64 k=3 s=1 act=*",
                "conv1d f=64 k=3 s=1 act=*",
                "dropout rate=0.5",
                "maxpool k=2 s=1",
                "flatten",
                "lstm u=100 seq=false",
                "dropout rate=0.5",
                "dense u=100 act=linear",
                "dropout rate=0.25",
                "dense u=50 act=relu",
                "dropout rate=0.25",
                "dense u=1 act=sigmoid",
            ],
        }
    }

    #[test]
    fn built_stacks_match_golden_tables_row_for_row() {
        for name in ALL_MODELS {
            let spec = build(name, Activation::Relu);
            let got: Vec<String> = spec.layers.iter().map(render).collect();
            let want = golden_rows(name);
            assert_eq!(got, want, "{name}");
            spec.validate().unwrap();
        }
    }

    #[test]
    fn layer_counts_match_published_totals() {
        // Totals include the input row, hence the +1.
        let want = [
            (ModelName::Cnn1, 9),
            (ModelName::Cnn2, 12),
            (ModelName::Cnn3, 11),
            (ModelName::Lstm1, 6),
            (ModelName::Lstm2, 7),
            (ModelName::CnnLstm1, 11),
            (ModelName::CnnLstm2, 13),
        ];
        for (name, total) in want {
            let spec = build(name, Activation::Relu);
            assert_eq!(spec.layers.len() + 1, total, "{name}");
        }
    }

    #[test]
    fn variable_activation_touches_conv_rows_only() {
        for name in ALL_MODELS {
            let relu = build(name, Activation::Relu);
            let selu = build(name, Activation::Selu);
            for (a, b) in relu.layers.iter().zip(&selu.layers) {
                match (a, b) {
                    (
                        LayerSpec::Conv1d { activation: x, .. },
                        LayerSpec::Conv1d { activation: y, .. },
                    ) => {
                        assert_eq!(*x, Activation::Relu);
                        assert_eq!(*y, Activation::Selu);
                    }
                    _ => assert_eq!(a, b, "{name}: non-conv rows must not vary"),
                }
            }
        }
    }

    #[test]
    fn cnn_lstm_2_extends_1_by_dense50_and_dropout() {
        let one = build(ModelName::CnnLstm1, Activation::Selu);
        let two = build(ModelName::CnnLstm2, Activation::Selu);
        let shared = one.layers.len() - 1;
        assert_eq!(one.layers[..shared], two.layers[..shared]);
        assert_eq!(
            two.layers[shared..shared + 2],
            [
                LayerSpec::Dense { units: 50, activation: Activation::Relu },
                LayerSpec::Dropout { rate: 0.25 },
            ]
        );
        assert_eq!(one.layers.last(), two.layers.last());
    }

    #[test]
    fn shape_oracle_full_length_frames() {
        // 6250 × 19 input.
        let spec = build(ModelName::CnnLstm1, Activation::Relu);
        let shapes = output_shapes(&spec, 6250, 19).unwrap();
        assert_eq!(shapes[0], vec![6248, 64]); // conv k3
        assert_eq!(shapes[1], vec![6246, 64]); // conv k3
        assert_eq!(shapes[3], vec![6245, 64]); // pool w2 s1
        assert_eq!(shapes[4], vec![6245, 64]); // flatten marker: unchanged
        assert_eq!(shapes[5], vec![100]); // lstm, last step
        assert_eq!(*shapes.last().unwrap(), vec![1]);

        let lstm2 = build(ModelName::Lstm2, Activation::Relu);
        let shapes = output_shapes(&lstm2, 6250, 19).unwrap();
        assert_eq!(shapes[0], vec![6250, 100]); // return_sequence
        assert_eq!(shapes[1], vec![50]);
    }

    #[test]
    fn shape_oracle_reduced_frame_flatten_width() {
        // 500 × 19 input through CNN-1: 500 → 498 → 496 → pooled 495,
        // flattened to 495 · 64 = 31680 features.
        let spec = build(ModelName::Cnn1, Activation::Relu);
        let shapes = output_shapes(&spec, 500, 19).unwrap();
        assert_eq!(shapes[3], vec![495, 64]);
        assert_eq!(shapes[4], vec![31680]);
        assert_eq!(shapes[5], vec![100]);
        assert_eq!(*shapes.last().unwrap(), vec![2]);
    }

    #[test]
    fn shape_oracle_rejects_too_short_input() {
        let spec = build(ModelName::Cnn1, Activation::Relu);
        assert!(output_shapes(&spec, 2, 19).is_err());
    }

    #[test]
    fn names_parse_from_loose_spellings() {
        for name in ALL_MODELS {
            assert_eq!(name.as_str().parse::<ModelName>().unwrap(), name);
            let lower = name.as_str().to_ascii_lowercase().replace('-', "_");
            assert_eq!(lower.parse::<ModelName>().unwrap(), name);
        }
        assert!("cnn4".parse::<ModelName>().is_err());
        assert_eq!(
            serde_json::to_string(&ModelName::CnnLstm2).unwrap(),
            "\"CNN-LSTM-2\""
        );
    }
}
