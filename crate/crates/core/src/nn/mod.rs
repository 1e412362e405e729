//! Layer kernels: forward and backward passes as plain functions.
//!
//! Every kernel accepts either a single sample or a batch:
//!
//! * sequence ops (conv, pooling, LSTM) take `[t, c]` or `[b, t, c]`;
//! * vector ops (dense, loss) take `[f]` or `[b, f]`;
//! * element-wise ops (activations, dropout) take any shape.
//!
//! The rank of the output always mirrors the rank of the input, so a kernel
//! chain built for one sample works unchanged on a batch. Backward functions
//! consume the caches their forward counterparts produced; gradient shapes
//! equal the shapes of the values they correspond to.

mod activation;
mod conv;
mod dense;
mod dropout;
mod loss;
mod lstm;

pub use activation::Activation;
pub use conv::{conv1d, conv1d_backward, maxpool1d, maxpool1d_backward, MaxPoolCache};
pub use dense::{dense, dense_backward, flatten};
pub use dropout::{apply_mask, sample_mask, DropoutMask};
pub use loss::{bce_backward, bce_loss, Reduction, BCE_EPSILON};
pub use lstm::{lstm_backward, lstm_forward, LstmCache, LstmGrads, LstmParams};

use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Views a tensor as a batch of sequences: rank 2 `[t, c]` is one sample,
/// rank 3 `[b, t, c]` is a batch. Returns `(batch, time, channels)`.
pub(crate) fn as_batch_seq(input: &Tensor) -> Result<(usize, usize, usize)> {
    match *input.shape() {
        [t, c] => Ok((1, t, c)),
        [b, t, c] => Ok((b, t, c)),
        ref s => Err(Error::shape(format!(
            "expected a [time, channels] or [batch, time, channels] tensor, got {s:?}"
        ))),
    }
}

/// Output shape for a sequence op, preserving the presence of the batch axis.
pub(crate) fn seq_out_shape(input_rank: usize, b: usize, t: usize, c: usize) -> Vec<usize> {
    if input_rank == 2 {
        vec![t, c]
    } else {
        vec![b, t, c]
    }
}

/// Views a tensor as a batch of vectors: rank 1 `[f]` is one sample,
/// rank 2 `[b, f]` is a batch. Returns `(batch, features)`.
pub(crate) fn as_batch_vec(input: &Tensor) -> Result<(usize, usize)> {
    match *input.shape() {
        [f] => Ok((1, f)),
        [b, f] => Ok((b, f)),
        ref s => Err(Error::shape(format!(
            "expected a [features] or [batch, features] tensor, got {s:?}"
        ))),
    }
}

/// Output shape for a vector op, preserving the presence of the batch axis.
pub(crate) fn vec_out_shape(input_rank: usize, b: usize, f: usize) -> Vec<usize> {
    if input_rank == 1 {
        vec![f]
    } else {
        vec![b, f]
    }
}
