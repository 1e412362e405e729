//! Model checkpoint container.
//!
//! Layout (all integers little-endian):
//!
//! | bytes        | content                                     |
//! |--------------|---------------------------------------------|
//! | 0..4         | magic `SZCP`                                |
//! | 4..8         | format version u32 (currently 1)            |
//! | 8..12        | JSON header length u32                      |
//! | 12..12+len   | JSON header                                 |
//! | rest         | parameter tensors, little-endian f64        |
//!
//! The header holds the spec, training config, input geometry, the
//! normalization scheme the model was trained under, the learning curve,
//! and the shape of every tensor. Tensors follow in the canonical flat
//! order (layer by layer, weights before biases).

use std::fs;
use std::io::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::Normalization;
use crate::error::{Error, Result};
use crate::tensor::Tensor;

use super::{EpochStats, LayerParams, LayerSpec, ModelParams, ModelSpec, TrainConfig, TrainedModel};

const MAGIC: &[u8; 4] = b"SZCP";
const VERSION: u32 = 1;

/// Sidecar facts stored with the parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckpointMeta {
    /// Normalization scheme the training frames carried.
    pub normalization: Normalization,
}

#[derive(Serialize, Deserialize)]
struct Header {
    spec: ModelSpec,
    config: TrainConfig,
    input_samples: usize,
    input_channels: usize,
    meta: CheckpointMeta,
    learning_curve: Vec<EpochStats>,
    tensor_shapes: Vec<Vec<usize>>,
}

pub fn save_checkpoint(
    path: &Path,
    model: &TrainedModel,
    normalization: Normalization,
) -> Result<()> {
    let flat = model.params.flat();
    let header = Header {
        spec: model.spec.clone(),
        config: model.config.clone(),
        input_samples: model.input_samples,
        input_channels: model.input_channels,
        meta: CheckpointMeta { normalization },
        learning_curve: model.learning_curve.clone(),
        tensor_shapes: flat.iter().map(|(t, _)| t.shape().to_vec()).collect(),
    };
    let header_json = serde_json::to_vec(&header)
        .map_err(|e| Error::data(format!("checkpoint header serialization: {e}")))?;
    let header_len = u32::try_from(header_json.len())
        .map_err(|_| Error::data("checkpoint header exceeds 4 GiB".to_string()))?;

    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut buf = std::io::BufWriter::new(file);
    buf.write_all(MAGIC).map_err(|e| Error::io(path, e))?;
    buf.write_all(&VERSION.to_le_bytes())
        .map_err(|e| Error::io(path, e))?;
    buf.write_all(&header_len.to_le_bytes())
        .map_err(|e| Error::io(path, e))?;
    buf.write_all(&header_json).map_err(|e| Error::io(path, e))?;
    for (tensor, _) in flat {
        for v in tensor.data() {
            buf.write_all(&v.to_le_bytes())
                .map_err(|e| Error::io(path, e))?;
        }
    }
    buf.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<(TrainedModel, CheckpointMeta)> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let fail = |msg: &str| Error::data(format!("{}: {msg}", path.display()));
    if bytes.len() < 12 {
        return Err(fail("too short to be a checkpoint"));
    }
    if &bytes[0..4] != MAGIC {
        return Err(fail("bad magic; not a checkpoint"));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != VERSION {
        return Err(fail(&format!(
            "checkpoint format version {version}, this build reads {VERSION}"
        )));
    }
    let header_len = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let payload_at = 12 + header_len;
    if bytes.len() < payload_at {
        return Err(fail("truncated header"));
    }
    let header: Header = serde_json::from_slice(&bytes[12..payload_at])
        .map_err(|e| fail(&format!("bad header: {e}")))?;

    let total: usize = header.tensor_shapes.iter().map(|s| numel(s)).sum();
    if bytes.len() != payload_at + total * 8 {
        return Err(fail(&format!(
            "payload is {} bytes, tensor shapes require {}",
            bytes.len() - payload_at,
            total * 8
        )));
    }

    let mut tensors = Vec::with_capacity(header.tensor_shapes.len());
    let mut off = payload_at;
    for shape in &header.tensor_shapes {
        let n = numel(shape);
        let mut data = Vec::with_capacity(n);
        for _ in 0..n {
            data.push(f64::from_le_bytes(bytes[off..off + 8].try_into().unwrap()));
            off += 8;
        }
        tensors.push(Tensor::from_shape_vec(shape, data)?);
    }

    let mut it = tensors.into_iter();
    let mut take = || it.next().ok_or_else(|| fail("missing tensors"));
    let mut layers = Vec::with_capacity(header.spec.layers.len());
    for layer in &header.spec.layers {
        layers.push(match layer {
            LayerSpec::Conv1d { .. } => LayerParams::Conv {
                kernels: take()?,
                bias: take()?,
            },
            LayerSpec::Dense { .. } => LayerParams::Dense {
                weights: take()?,
                bias: take()?,
            },
            LayerSpec::Lstm { .. } => LayerParams::Lstm {
                w_input: take()?,
                w_recurrent: take()?,
                bias: take()?,
            },
            LayerSpec::Dropout { .. } | LayerSpec::MaxPool1d { .. } | LayerSpec::Flatten => {
                LayerParams::None
            }
        });
    }
    if it.next().is_some() {
        return Err(fail("extra tensors beyond the spec's layers"));
    }

    let model = TrainedModel {
        spec: header.spec,
        params: ModelParams { layers },
        config: header.config,
        input_samples: header.input_samples,
        input_channels: header.input_channels,
        learning_curve: header.learning_curve,
    };
    Ok((model, header.meta))
}

fn numel(shape: &[usize]) -> usize {
    shape.iter().product()
}
