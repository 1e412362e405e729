//! Fully-connected layer and the flatten reshape.

use crate::error::{Error, Result};
use crate::linalg::{gemm, MatMut, MatRef};
use crate::tensor::Tensor;

use super::{as_batch_vec, vec_out_shape};

fn dense_dims(input: &Tensor, weights: &Tensor, bias: &Tensor) -> Result<(usize, usize, usize)> {
    let (b, f) = as_batch_vec(input)?;
    let (out, fin) = weights.dims2().map_err(|_| {
        Error::shape(format!(
            "dense weights must be [units, features], got {:?}",
            weights.shape()
        ))
    })?;
    if fin != f {
        return Err(Error::shape(format!(
            "dense expects {fin} input features, got {f}"
        )));
    }
    if bias.shape() != [out] {
        return Err(Error::shape(format!(
            "dense bias shape {:?} does not match {out} units",
            bias.shape()
        )));
    }
    Ok((b, f, out))
}

/// Affine map `y = x W^T + bias` with `weights: [units, features]`.
/// Accepts `[features]` or `[batch, features]`.
pub fn dense(input: &Tensor, weights: &Tensor, bias: &Tensor) -> Result<Tensor> {
    let (b, f, out) = dense_dims(input, weights, bias)?;
    let mut y = vec![0.0; b * out];
    gemm(
        1.0,
        MatRef::contiguous(input.data(), b, f),
        MatRef::contiguous(weights.data(), out, f).t(),
        0.0,
        MatMut::contiguous(&mut y, b, out),
    );
    let bias_v = bias.data();
    for row in y.chunks_exact_mut(out) {
        for (v, &bv) in row.iter_mut().zip(bias_v) {
            *v += bv;
        }
    }
    Tensor::from_shape_vec(&vec_out_shape(input.rank(), b, out), y)
}

/// Gradients of [`dense`]: `(d_input, d_weights, d_bias)`; `d_input` is
/// computed only when `need_dx` is set.
pub fn dense_backward(
    input: &Tensor,
    weights: &Tensor,
    bias: &Tensor,
    dy: &Tensor,
    need_dx: bool,
) -> Result<(Option<Tensor>, Tensor, Tensor)> {
    let (b, f, out) = dense_dims(input, weights, bias)?;
    let expected = vec_out_shape(input.rank(), b, out);
    if dy.shape() != expected.as_slice() {
        return Err(Error::shape(format!(
            "dense backward: upstream gradient shape {:?}, expected {:?}",
            dy.shape(),
            expected
        )));
    }

    let mut dbias = vec![0.0; out];
    for row in dy.data().chunks_exact(out) {
        for (acc, &g) in dbias.iter_mut().zip(row) {
            *acc += g;
        }
    }

    // dW = dy^T [out × b] * x [b × f]
    let mut dw = vec![0.0; out * f];
    gemm(
        1.0,
        MatRef::contiguous(dy.data(), b, out).t(),
        MatRef::contiguous(input.data(), b, f),
        0.0,
        MatMut::contiguous(&mut dw, out, f),
    );

    let dx = if need_dx {
        // dx = dy [b × out] * W [out × f]
        let mut dx = vec![0.0; b * f];
        gemm(
            1.0,
            MatRef::contiguous(dy.data(), b, out),
            MatRef::contiguous(weights.data(), out, f),
            0.0,
            MatMut::contiguous(&mut dx, b, f),
        );
        Some(Tensor::from_shape_vec(input.shape(), dx)?)
    } else {
        None
    };

    Ok((
        dx,
        Tensor::from_shape_vec(weights.shape(), dw)?,
        Tensor::from_shape_vec(bias.shape(), dbias)?,
    ))
}

/// Collapses a `[t, c]` sample to `[t*c]`, or `[b, t, c]` to `[b, t*c]`.
/// Rank-1 vectors pass through unchanged.
pub fn flatten(input: &Tensor) -> Result<Tensor> {
    match *input.shape() {
        [_] => Ok(input.clone()),
        [t, c] => input.clone().reshaped(&[t * c]),
        [b, t, c] => input.clone().reshaped(&[b, t * c]),
        ref s => Err(Error::shape(format!("cannot flatten shape {s:?}"))),
    }
}
