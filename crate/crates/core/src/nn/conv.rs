//! Temporal (1-D) convolution and max pooling over multichannel sequences.
//!
//! Convolution follows the cross-correlation convention used by deep-learning
//! frameworks: `out[p, o] = bias[o] + Σ_{w,c} in[p*stride + w, c] * K[o, w, c]`
//! with no padding, so a length-`t` input yields `(t - k)/stride + 1` output
//! steps. The heavy lifting is an im2col copy followed by a single GEMM, which
//! keeps the kernel fast on one core for both single frames and batches.

use crate::error::{Error, Result};
use crate::linalg::{gemm, MatMut, MatRef};
use crate::tensor::Tensor;

use super::{as_batch_seq, seq_out_shape};

/// Validates conv hyper-parameters and returns `(out_time, out_channels, k, in_c)`.
fn conv_dims(
    input: &Tensor,
    kernels: &Tensor,
    bias: &Tensor,
    stride: usize,
) -> Result<(usize, usize, usize, usize, usize, usize)> {
    let (b, t, c) = as_batch_seq(input)?;
    let (out_ch, k, kc) = kernels.dims3().map_err(|_| {
        Error::shape(format!(
            "conv kernels must be [filters, width, channels], got {:?}",
            kernels.shape()
        ))
    })?;
    if kc != c {
        return Err(Error::shape(format!(
            "conv kernel channels {kc} do not match input channels {c}"
        )));
    }
    if bias.shape() != [out_ch] {
        return Err(Error::shape(format!(
            "conv bias shape {:?} does not match {out_ch} filters",
            bias.shape()
        )));
    }
    if stride == 0 {
        return Err(Error::config("conv stride must be at least 1".to_string()));
    }
    if k == 0 || k > t {
        return Err(Error::shape(format!(
            "conv kernel width {k} invalid for input of {t} time steps"
        )));
    }
    let t_out = (t - k) / stride + 1;
    Ok((b, t, c, out_ch, k, t_out))
}

/// Gathers sliding windows into a `[b*t_out, k*c]` matrix. Each window spans
/// `k` consecutive time steps, which are contiguous rows of the row-major
/// input, so a window is a single `k*c` copy.
fn im2col(input: &[f64], b: usize, t: usize, c: usize, k: usize, stride: usize, t_out: usize) -> Vec<f64> {
    let win = k * c;
    let mut cols = vec![0.0; b * t_out * win];
    for s in 0..b {
        let sample = &input[s * t * c..(s + 1) * t * c];
        for p in 0..t_out {
            let src = &sample[p * stride * c..p * stride * c + win];
            let dst_off = (s * t_out + p) * win;
            cols[dst_off..dst_off + win].copy_from_slice(src);
        }
    }
    cols
}

/// 1-D convolution; returns `[t_out, filters]` or `[b, t_out, filters]`.
pub fn conv1d(input: &Tensor, kernels: &Tensor, bias: &Tensor, stride: usize) -> Result<Tensor> {
    let (b, t, c, out_ch, k, t_out) = conv_dims(input, kernels, bias, stride)?;
    let cols = im2col(input.data(), b, t, c, k, stride, t_out);
    let rows = b * t_out;
    let win = k * c;
    let mut out = vec![0.0; rows * out_ch];
    // out = cols [rows × win] * K^T [win × out_ch]
    gemm(
        1.0,
        MatRef::contiguous(&cols, rows, win),
        MatRef::contiguous(kernels.data(), out_ch, win).t(),
        0.0,
        MatMut::contiguous(&mut out, rows, out_ch),
    );
    let bias_v = bias.data();
    for row in out.chunks_exact_mut(out_ch) {
        for (y, &bv) in row.iter_mut().zip(bias_v) {
            *y += bv;
        }
    }
    Tensor::from_shape_vec(&seq_out_shape(input.rank(), b, t_out, out_ch), out)
}

/// Gradients of [`conv1d`]: `(d_input, d_kernels, d_bias)`. The input
/// gradient is skipped (returned as `None`) unless `need_dx` is set, which
/// saves a GEMM plus a scatter when the input is a non-trainable leaf.
pub fn conv1d_backward(
    input: &Tensor,
    kernels: &Tensor,
    bias: &Tensor,
    stride: usize,
    dy: &Tensor,
    need_dx: bool,
) -> Result<(Option<Tensor>, Tensor, Tensor)> {
    let (b, t, c, out_ch, k, t_out) = conv_dims(input, kernels, bias, stride)?;
    let expected = seq_out_shape(input.rank(), b, t_out, out_ch);
    if dy.shape() != expected.as_slice() {
        return Err(Error::shape(format!(
            "conv backward: upstream gradient shape {:?}, expected {:?}",
            dy.shape(),
            expected
        )));
    }
    let rows = b * t_out;
    let win = k * c;

    // d_bias: column sums of dy.
    let mut dbias = vec![0.0; out_ch];
    for row in dy.data().chunks_exact(out_ch) {
        for (acc, &g) in dbias.iter_mut().zip(row) {
            *acc += g;
        }
    }

    // d_kernels = dy^T [out_ch × rows] * cols [rows × win]; the im2col matrix
    // is recomputed rather than cached — it is a pure memcpy product.
    let cols = im2col(input.data(), b, t, c, k, stride, t_out);
    let mut dkern = vec![0.0; out_ch * win];
    gemm(
        1.0,
        MatRef::contiguous(dy.data(), rows, out_ch).t(),
        MatRef::contiguous(&cols, rows, win),
        0.0,
        MatMut::contiguous(&mut dkern, out_ch, win),
    );

    let dx = if need_dx {
        // d_cols = dy [rows × out_ch] * K [out_ch × win], then scatter-add the
        // overlapping windows back onto the input grid (col2im).
        let mut dcols = vec![0.0; rows * win];
        gemm(
            1.0,
            MatRef::contiguous(dy.data(), rows, out_ch),
            MatRef::contiguous(kernels.data(), out_ch, win),
            0.0,
            MatMut::contiguous(&mut dcols, rows, win),
        );
        let mut dx = vec![0.0; b * t * c];
        for s in 0..b {
            let sample = &mut dx[s * t * c..(s + 1) * t * c];
            for p in 0..t_out {
                let src = &dcols[(s * t_out + p) * win..(s * t_out + p + 1) * win];
                let dst = &mut sample[p * stride * c..p * stride * c + win];
                for (d, &g) in dst.iter_mut().zip(src) {
                    *d += g;
                }
            }
        }
        Some(Tensor::from_shape_vec(input.shape(), dx)?)
    } else {
        None
    };

    Ok((
        dx,
        Tensor::from_shape_vec(kernels.shape(), dkern)?,
        Tensor::from_shape_vec(bias.shape(), dbias)?,
    ))
}

/// Winning input positions recorded by the pooling forward pass, consumed by
/// the backward pass to route gradients.
#[derive(Clone, Debug)]
pub struct MaxPoolCache {
    /// For each output element (row-major), the time index of the maximum.
    argmax: Vec<u32>,
}

fn pool_dims(input: &Tensor, window: usize, stride: usize) -> Result<(usize, usize, usize, usize)> {
    let (b, t, c) = as_batch_seq(input)?;
    if stride == 0 {
        return Err(Error::config("pool stride must be at least 1".to_string()));
    }
    if window == 0 || window > t {
        return Err(Error::shape(format!(
            "pool window {window} invalid for input of {t} time steps"
        )));
    }
    Ok((b, t, c, (t - window) / stride + 1))
}

/// Temporal max pooling; channels are pooled independently. Ties resolve to
/// the earliest time step.
pub fn maxpool1d(input: &Tensor, window: usize, stride: usize) -> Result<(Tensor, MaxPoolCache)> {
    let (b, t, c, t_out) = pool_dims(input, window, stride)?;
    let data = input.data();
    let mut out = vec![0.0; b * t_out * c];
    let mut argmax = vec![0u32; b * t_out * c];
    for s in 0..b {
        let sample = &data[s * t * c..(s + 1) * t * c];
        for p in 0..t_out {
            let start = p * stride;
            let out_off = (s * t_out + p) * c;
            // Initialise with the first row of the window, then compare rest.
            out[out_off..out_off + c].copy_from_slice(&sample[start * c..start * c + c]);
            for a in argmax[out_off..out_off + c].iter_mut() {
                *a = start as u32;
            }
            for w in 1..window {
                let row = &sample[(start + w) * c..(start + w + 1) * c];
                for ch in 0..c {
                    if row[ch] > out[out_off + ch] {
                        out[out_off + ch] = row[ch];
                        argmax[out_off + ch] = (start + w) as u32;
                    }
                }
            }
        }
    }
    let tensor = Tensor::from_shape_vec(&seq_out_shape(input.rank(), b, t_out, c), out)?;
    Ok((tensor, MaxPoolCache { argmax }))
}

/// Gradient of [`maxpool1d`]: routes each upstream element to the input
/// position that won the forward max.
pub fn maxpool1d_backward(
    input_shape: &[usize],
    window: usize,
    stride: usize,
    cache: &MaxPoolCache,
    dy: &Tensor,
) -> Result<Tensor> {
    let (b, t, c) = match *input_shape {
        [t, c] => (1, t, c),
        [b, t, c] => (b, t, c),
        ref s => {
            return Err(Error::shape(format!(
                "pool backward: invalid input shape {s:?}"
            )))
        }
    };
    let t_out = (t - window) / stride + 1;
    let expected: usize = b * t_out * c;
    if dy.numel() != expected || cache.argmax.len() != expected {
        return Err(Error::shape(format!(
            "pool backward: gradient has {} elements, expected {expected}",
            dy.numel()
        )));
    }
    let mut dx = vec![0.0; b * t * c];
    let g = dy.data();
    for s in 0..b {
        for p in 0..t_out {
            let off = (s * t_out + p) * c;
            for ch in 0..c {
                let win_t = cache.argmax[off + ch] as usize;
                dx[(s * t + win_t) * c + ch] += g[off + ch];
            }
        }
    }
    Tensor::from_shape_vec(input_shape, dx)
}
