//! Assembles computation graphs from a spec + parameters and runs
//! batched inference.

use crate::data::{Frame, Label, Normalization};
use crate::error::{Error, Result};
use crate::graph::{Graph, Mode, NodeId};
use crate::nn::Activation;
use crate::rng::{rng_from_seed, Rng};
use crate::tensor::Tensor;

use super::{flatten_feeds_lstm, output_shapes, LayerParams, LayerSpec, ModelParams, ModelSpec};

/// A built forward pass over one batch.
pub struct BatchGraph {
    pub graph: Graph,
    /// Head output node, `[batch, head_units]`.
    pub output: NodeId,
    /// Trainable leaves in [`ModelParams::flat`] order.
    pub param_ids: Vec<NodeId>,
    /// The subset of `param_ids` that are weight matrices (L2 targets).
    pub weight_ids: Vec<NodeId>,
}

/// Builds the graph for `batch` (`[b, t, c]`). In train mode, dropout draws
/// masks from `rng`; in eval mode dropout is an exact no-op and `rng` is
/// untouched.
pub fn forward_batch(
    spec: &ModelSpec,
    params: &ModelParams,
    batch: Tensor,
    mode: Mode,
    rng: &mut Rng,
) -> Result<BatchGraph> {
    if params.layers.len() != spec.layers.len() {
        return Err(Error::shape(format!(
            "parameter set has {} layers, spec has {}",
            params.layers.len(),
            spec.layers.len()
        )));
    }
    let mut graph = Graph::new(mode);
    let mut x = graph.input(batch);
    let mut param_ids = Vec::new();
    let mut weight_ids = Vec::new();
    for (i, layer) in spec.layers.iter().enumerate() {
        x = match (*layer, &params.layers[i]) {
            (
                LayerSpec::Conv1d {
                    stride, activation, ..
                },
                LayerParams::Conv { kernels, bias },
            ) => {
                let k = graph.param(kernels.clone());
                let b = graph.param(bias.clone());
                param_ids.push(k);
                weight_ids.push(k);
                param_ids.push(b);
                let y = graph.conv1d(x, k, b, stride)?;
                activated(&mut graph, y, activation)?
            }
            (LayerSpec::Dropout { rate }, LayerParams::None) => graph.dropout(x, rate, rng)?,
            (LayerSpec::MaxPool1d { window, stride }, LayerParams::None) => {
                graph.maxpool1d(x, window, stride)?
            }
            (LayerSpec::Flatten, LayerParams::None) => {
                if flatten_feeds_lstm(&spec.layers, i) {
                    x
                } else {
                    graph.flatten(x)?
                }
            }
            (LayerSpec::Dense { activation, .. }, LayerParams::Dense { weights, bias }) => {
                let w = graph.param(weights.clone());
                let b = graph.param(bias.clone());
                param_ids.push(w);
                weight_ids.push(w);
                param_ids.push(b);
                let y = graph.dense(x, w, b)?;
                activated(&mut graph, y, activation)?
            }
            (
                LayerSpec::Lstm {
                    return_sequence, ..
                },
                LayerParams::Lstm {
                    w_input,
                    w_recurrent,
                    bias,
                },
            ) => {
                let wx = graph.param(w_input.clone());
                let wh = graph.param(w_recurrent.clone());
                let b = graph.param(bias.clone());
                param_ids.push(wx);
                weight_ids.push(wx);
                param_ids.push(wh);
                weight_ids.push(wh);
                param_ids.push(b);
                graph.lstm(x, wx, wh, b, return_sequence)?
            }
            (l, p) => {
                return Err(Error::shape(format!(
                    "layer {i}: spec {l:?} does not match parameters {p:?}"
                )))
            }
        };
    }
    Ok(BatchGraph {
        graph,
        output: x,
        param_ids,
        weight_ids,
    })
}

fn activated(graph: &mut Graph, x: NodeId, act: Activation) -> Result<NodeId> {
    if act == Activation::Linear {
        Ok(x)
    } else {
        graph.activation(x, act)
    }
}

/// A classified frame: the SZ score (sigmoid output; for the two-unit head,
/// the SZ unit's value) and the decided label.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Prediction {
    pub score: f64,
    pub label: Label,
}

/// Decides a label from the head output row. Scalar head: SZ iff
/// `p ≥ threshold`. Two-unit head: argmax, ties to SZ.
pub(crate) fn decide(output: &[f64], threshold: f64) -> Prediction {
    match output {
        [p] => Prediction {
            score: *p,
            label: if *p >= threshold { Label::Sz } else { Label::Hc },
        },
        [sz, hc] => Prediction {
            score: *sz,
            label: if *sz >= *hc { Label::Sz } else { Label::Hc },
        },
        other => panic!("head produced {} outputs", other.len()),
    }
}

/// Batched eval-mode inference. Frames must all be `[t, c]` with the shape
/// the parameters were built for. Returns one [`Prediction`] per frame.
pub fn predict_scores(
    spec: &ModelSpec,
    params: &ModelParams,
    frames: &[&Tensor],
    threshold: f64,
) -> Result<Vec<Prediction>> {
    if frames.is_empty() {
        return Ok(Vec::new());
    }
    let (t, c) = frames[0].dims2()?;
    let chunk = micro_batch_limit(spec, t, c)?;
    let units = spec.head_units();
    let mut rng = rng_from_seed(0); // never drawn from in eval mode
    let mut out = Vec::with_capacity(frames.len());
    for group in frames.chunks(chunk) {
        let batch = stack(group, t, c)?;
        let bg = forward_batch(spec, params, batch, Mode::Eval, &mut rng)?;
        let values = bg.graph.value(bg.output).data();
        for row in 0..group.len() {
            out.push(decide(&values[row * units..(row + 1) * units], threshold));
        }
    }
    Ok(out)
}

/// Classifies a single frame, refusing raw (unnormalized) data unless
/// `allow_raw` is set.
pub fn predict_frame(
    spec: &ModelSpec,
    params: &ModelParams,
    frame: &Frame,
    threshold: f64,
    allow_raw: bool,
) -> Result<Prediction> {
    if frame.normalization == Normalization::Raw && !allow_raw {
        return Err(Error::data(format!(
            "frame {}/{} is not normalized; pass allow_raw to classify raw data",
            frame.subject_id, frame.frame_index
        )));
    }
    Ok(predict_scores(spec, params, &[&frame.data], threshold)?[0])
}

/// Copies `[t, c]` frames into one `[b, t, c]` batch.
pub(crate) fn stack(frames: &[&Tensor], t: usize, c: usize) -> Result<Tensor> {
    let mut data = Vec::with_capacity(frames.len() * t * c);
    for f in frames {
        let dims = f.dims2()?;
        if dims != (t, c) {
            return Err(Error::shape(format!(
                "frame is {}x{}, batch is {t}x{c}",
                dims.0, dims.1
            )));
        }
        data.extend_from_slice(f.data());
    }
    Tensor::from_shape_vec(&[frames.len(), t, c], data)
}

/// Largest per-pass batch that keeps the cached activations of one forward +
/// backward pass within a fixed element budget. Pure function of the spec
/// and frame geometry, so identical runs partition batches identically.
pub(crate) fn micro_batch_limit(spec: &ModelSpec, samples: usize, channels: usize) -> Result<usize> {
    const BUDGET_ELEMS: usize = 24_000_000; // ≈ 190 MB of f64 per pass
    let shapes = output_shapes(spec, samples, channels)?;
    let mut per_sample: usize = samples * channels;
    let mut in_shape = vec![samples, channels];
    for (layer, shape) in spec.layers.iter().zip(&shapes) {
        per_sample += match *layer {
            // im2col scratch: t_out · kernel · in_channels.
            LayerSpec::Conv1d { kernel, .. } => shape[0] * kernel * in_shape[1] + numel(shape),
            // gates [t, 4u] + tanh_c/h_prev/c_prev [t, u] each.
            LayerSpec::Lstm { units, .. } => in_shape[0] * units * 7 + numel(shape),
            _ => numel(shape),
        };
        in_shape = shape.clone();
    }
    Ok((BUDGET_ELEMS / per_sample.max(1)).clamp(1, 256))
}

fn numel(shape: &[usize]) -> usize {
    shape.iter().product()
}
