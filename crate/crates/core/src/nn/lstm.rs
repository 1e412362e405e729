//! Long short-term memory layer with full backpropagation through time.
//!
//! Parameter layout packs the four gates row-wise in the fixed order
//! input `i`, forget `f`, cell candidate `g`, output `o`:
//!
//! * `w_input`     `[4*units, features]` — applied to the step input;
//! * `w_recurrent` `[4*units, units]`    — applied to the previous state;
//! * `bias`        `[4*units]`.
//!
//! Per step: `i,f,o = σ(pre)`, `g = tanh(pre)`, `c_t = f∘c_{t-1} + i∘g`,
//! `h_t = o∘tanh(c_t)`, starting from `h_0 = c_0 = 0`.
//!
//! The input projection for all steps is one GEMM; the recurrent projection
//! is one small strided GEMM per step. The backward pass reduces the weight
//! gradients with whole-sequence GEMMs over the cached gate activations.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{gemm, MatMut, MatRef};
use crate::tensor::Tensor;

use super::activation::sigmoid;
use super::{as_batch_seq, seq_out_shape};

/// Weights of one LSTM layer.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LstmParams {
    pub w_input: Tensor,
    pub w_recurrent: Tensor,
    pub bias: Tensor,
}

impl LstmParams {
    /// Zero-initialised parameters for `units` cells over `features` inputs.
    pub fn zeros(units: usize, features: usize) -> Self {
        LstmParams {
            w_input: Tensor::zeros(&[4 * units, features]),
            w_recurrent: Tensor::zeros(&[4 * units, units]),
            bias: Tensor::zeros(&[4 * units]),
        }
    }

    pub fn units(&self) -> usize {
        self.w_recurrent.shape().get(1).copied().unwrap_or(0)
    }

    pub fn features(&self) -> usize {
        self.w_input.shape().get(1).copied().unwrap_or(0)
    }
}

/// Checks the three weight tensors agree and returns `(units, features)`.
fn validate_weights(w_input: &Tensor, w_recurrent: &Tensor, bias: &Tensor) -> Result<(usize, usize)> {
    let (rows_x, feat) = w_input.dims2()?;
    let (rows_h, units) = w_recurrent.dims2()?;
    if units == 0 || rows_x != 4 * units || rows_h != 4 * units {
        return Err(Error::shape(format!(
            "inconsistent lstm weights: w_input {:?}, w_recurrent {:?}",
            w_input.shape(),
            w_recurrent.shape()
        )));
    }
    if bias.shape() != [4 * units] {
        return Err(Error::shape(format!(
            "lstm bias shape {:?} does not match {} gate rows",
            bias.shape(),
            4 * units
        )));
    }
    Ok((units, feat))
}

/// Activations recorded by the forward pass, consumed by BPTT.
/// All buffers are laid out `[batch, time, width]` row-major.
#[derive(Clone, Debug)]
pub struct LstmCache {
    b: usize,
    t: usize,
    units: usize,
    /// Post-nonlinearity gate values `i,f,g,o`, width `4*units`.
    gates: Vec<f64>,
    /// `tanh(c_t)` per step, width `units`.
    tanh_c: Vec<f64>,
    /// Hidden state entering each step (`h_{t-1}`), width `units`.
    h_prev: Vec<f64>,
    /// Cell state entering each step (`c_{t-1}`), width `units`.
    c_prev: Vec<f64>,
}

/// Runs the layer over `[t, features]` or `[b, t, features]`.
///
/// With `return_sequence` the output keeps the time axis (`[.., t, units]`);
/// otherwise only the final hidden state is returned (`[units]`/`[b, units]`).
pub fn lstm_forward(
    input: &Tensor,
    w_input: &Tensor,
    w_recurrent: &Tensor,
    bias: &Tensor,
    return_sequence: bool,
) -> Result<(Tensor, LstmCache)> {
    let (units, feat) = validate_weights(w_input, w_recurrent, bias)?;
    let (b, t, c) = as_batch_seq(input)?;
    if c != feat {
        return Err(Error::shape(format!(
            "lstm expects {feat} input features, got {c}"
        )));
    }
    let u4 = 4 * units;
    let rows = b * t;

    // Input projection for every (sample, step) pair at once, plus bias.
    let mut gates = vec![0.0; rows * u4];
    gemm(
        1.0,
        MatRef::contiguous(input.data(), rows, feat),
        MatRef::contiguous(w_input.data(), u4, feat).t(),
        0.0,
        MatMut::contiguous(&mut gates, rows, u4),
    );
    let bias_v = bias.data();
    for row in gates.chunks_exact_mut(u4) {
        for (v, &bv) in row.iter_mut().zip(bias_v) {
            *v += bv;
        }
    }

    let mut h_prev = vec![0.0; rows * units];
    let mut c_prev = vec![0.0; rows * units];
    let mut tanh_c = vec![0.0; rows * units];
    let mut h_cur = vec![0.0; b * units];
    let mut c_cur = vec![0.0; b * units];
    let mut seq_out = if return_sequence {
        vec![0.0; rows * units]
    } else {
        Vec::new()
    };

    let wh = w_recurrent.data();
    for step in 0..t {
        // Record the states entering this step.
        for s in 0..b {
            let dst = (s * t + step) * units;
            h_prev[dst..dst + units].copy_from_slice(&h_cur[s * units..(s + 1) * units]);
            c_prev[dst..dst + units].copy_from_slice(&c_cur[s * units..(s + 1) * units]);
        }
        // Recurrent projection; h is all-zero at step 0, so nothing to add.
        if step > 0 {
            gemm(
                1.0,
                MatRef::contiguous(&h_cur, b, units),
                MatRef::contiguous(wh, u4, units).t(),
                1.0,
                MatMut::strided(&mut gates[step * u4..], b, u4, t * u4, 1),
            );
        }
        // Gate nonlinearities and the state update.
        for s in 0..b {
            let gbase = (s * t + step) * u4;
            let (ig, rest) = gates[gbase..gbase + u4].split_at_mut(units);
            let (fg, rest) = rest.split_at_mut(units);
            let (gg, og) = rest.split_at_mut(units);
            let hc = &mut h_cur[s * units..(s + 1) * units];
            let cc = &mut c_cur[s * units..(s + 1) * units];
            let tc = &mut tanh_c[(s * t + step) * units..(s * t + step + 1) * units];
            for j in 0..units {
                let i = sigmoid(ig[j]);
                let f = sigmoid(fg[j]);
                let g = gg[j].tanh();
                let o = sigmoid(og[j]);
                ig[j] = i;
                fg[j] = f;
                gg[j] = g;
                og[j] = o;
                let cell = f * cc[j] + i * g;
                cc[j] = cell;
                let tch = cell.tanh();
                tc[j] = tch;
                hc[j] = o * tch;
            }
            if return_sequence {
                let dst = (s * t + step) * units;
                seq_out[dst..dst + units].copy_from_slice(hc);
            }
        }
    }

    let output = if return_sequence {
        Tensor::from_shape_vec(&seq_out_shape(input.rank(), b, t, units), seq_out)?
    } else if input.rank() == 2 {
        Tensor::from_vec(h_cur.clone())
    } else {
        Tensor::from_shape_vec(&[b, units], h_cur.clone())?
    };

    Ok((
        output,
        LstmCache {
            b,
            t,
            units,
            gates,
            tanh_c,
            h_prev,
            c_prev,
        },
    ))
}

/// Gradients produced by [`lstm_backward`].
#[derive(Debug)]
pub struct LstmGrads {
    pub d_input: Option<Tensor>,
    pub d_w_input: Tensor,
    pub d_w_recurrent: Tensor,
    pub d_bias: Tensor,
}

/// Backpropagation through time over a cached forward pass.
///
/// `dy` must match the forward output shape: per-step gradients when the
/// layer returned a sequence, final-state gradients otherwise.
pub fn lstm_backward(
    input: &Tensor,
    w_input: &Tensor,
    w_recurrent: &Tensor,
    bias: &Tensor,
    cache: &LstmCache,
    return_sequence: bool,
    dy: &Tensor,
    need_dx: bool,
) -> Result<LstmGrads> {
    let (units, feat) = validate_weights(w_input, w_recurrent, bias)?;
    let (b, t, _) = as_batch_seq(input)?;
    if b != cache.b || t != cache.t || units != cache.units {
        return Err(Error::shape(
            "lstm backward: cache does not match input".to_string(),
        ));
    }
    let expected: usize = if return_sequence { b * t * units } else { b * units };
    if dy.numel() != expected {
        return Err(Error::shape(format!(
            "lstm backward: gradient has {} elements, expected {expected}",
            dy.numel()
        )));
    }
    let u4 = 4 * units;
    let rows = b * t;
    let dyd = dy.data();

    let mut dgates = vec![0.0; rows * u4];
    let mut dh = vec![0.0; b * units];
    let mut dc = vec![0.0; b * units];
    if !return_sequence {
        dh.copy_from_slice(dyd);
    }

    for step in (0..t).rev() {
        for s in 0..b {
            let base = s * t + step;
            let hslice = &mut dh[s * units..(s + 1) * units];
            if return_sequence {
                for (hv, &g) in hslice.iter_mut().zip(&dyd[base * units..(base + 1) * units]) {
                    *hv += g;
                }
            }
            let gates = &cache.gates[base * u4..(base + 1) * u4];
            let (ig, rest) = gates.split_at(units);
            let (fg, rest) = rest.split_at(units);
            let (gg, og) = rest.split_at(units);
            let tc = &cache.tanh_c[base * units..(base + 1) * units];
            let cp = &cache.c_prev[base * units..(base + 1) * units];
            let dg = &mut dgates[base * u4..(base + 1) * u4];
            let dcs = &mut dc[s * units..(s + 1) * units];
            for j in 0..units {
                let dhj = hslice[j];
                let o = og[j];
                // Pre-activation gradients through σ'/tanh'.
                dg[3 * units + j] = dhj * tc[j] * o * (1.0 - o);
                let dcell = dcs[j] + dhj * o * (1.0 - tc[j] * tc[j]);
                let (i, f, g) = (ig[j], fg[j], gg[j]);
                dg[j] = dcell * g * i * (1.0 - i);
                dg[units + j] = dcell * cp[j] * f * (1.0 - f);
                dg[2 * units + j] = dcell * i * (1.0 - g * g);
                // Cell gradient flowing to step-1 through the forget gate.
                dcs[j] = dcell * f;
            }
        }
        // Hidden-state gradient entering the previous step.
        if step > 0 {
            let dg_step = MatRef::strided(&dgates[step * u4..], b, u4, t * u4, 1);
            gemm(
                1.0,
                dg_step,
                MatRef::contiguous(w_recurrent.data(), u4, units),
                0.0,
                MatMut::contiguous(&mut dh, b, units),
            );
        }
    }

    // Weight and bias gradients as whole-sequence reductions.
    let mut dwx = vec![0.0; u4 * feat];
    gemm(
        1.0,
        MatRef::contiguous(&dgates, rows, u4).t(),
        MatRef::contiguous(input.data(), rows, feat),
        0.0,
        MatMut::contiguous(&mut dwx, u4, feat),
    );
    let mut dwh = vec![0.0; u4 * units];
    gemm(
        1.0,
        MatRef::contiguous(&dgates, rows, u4).t(),
        MatRef::contiguous(&cache.h_prev, rows, units),
        0.0,
        MatMut::contiguous(&mut dwh, u4, units),
    );
    let mut dbias = vec![0.0; u4];
    for row in dgates.chunks_exact(u4) {
        for (acc, &g) in dbias.iter_mut().zip(row) {
            *acc += g;
        }
    }

    let d_input = if need_dx {
        let mut dx = vec![0.0; rows * feat];
        gemm(
            1.0,
            MatRef::contiguous(&dgates, rows, u4),
            MatRef::contiguous(w_input.data(), u4, feat),
            0.0,
            MatMut::contiguous(&mut dx, rows, feat),
        );
        Some(Tensor::from_shape_vec(input.shape(), dx)?)
    } else {
        None
    };

    Ok(LstmGrads {
        d_input,
        d_w_input: Tensor::from_shape_vec(&[u4, feat], dwx)?,
        d_w_recurrent: Tensor::from_shape_vec(&[u4, units], dwh)?,
        d_bias: Tensor::from_shape_vec(&[u4], dbias)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Scalar reference implementation for a single sample, written without
    /// any of the batched/GEMM machinery.
    fn reference_forward(
        x: &[f64],
        t: usize,
        feat: usize,
        p: &LstmParams,
    ) -> (Vec<f64>, Vec<f64>) {
        let u = p.units();
        let wx = p.w_input.data();
        let wh = p.w_recurrent.data();
        let bias = p.bias.data();
        let mut h = vec![0.0; u];
        let mut c = vec![0.0; u];
        let mut all_h = Vec::new();
        for step in 0..t {
            let xs = &x[step * feat..(step + 1) * feat];
            let mut pre = vec![0.0; 4 * u];
            for r in 0..4 * u {
                let mut acc = bias[r];
                for k in 0..feat {
                    acc += wx[r * feat + k] * xs[k];
                }
                for k in 0..u {
                    acc += wh[r * u + k] * h[k];
                }
                pre[r] = acc;
            }
            let mut new_h = vec![0.0; u];
            for j in 0..u {
                let i = sigmoid(pre[j]);
                let f = sigmoid(pre[u + j]);
                let g = pre[2 * u + j].tanh();
                let o = sigmoid(pre[3 * u + j]);
                c[j] = f * c[j] + i * g;
                new_h[j] = o * c[j].tanh();
            }
            h = new_h;
            all_h.extend_from_slice(&h);
        }
        (h, all_h)
    }

    fn demo_params(units: usize, feat: usize) -> LstmParams {
        let fill = |n: usize, scale: f64| -> Vec<f64> {
            (0..n).map(|i| ((i as f64) * scale).sin() * 0.5).collect()
        };
        LstmParams {
            w_input: Tensor::from_shape_vec(&[4 * units, feat], fill(4 * units * feat, 0.37))
                .unwrap(),
            w_recurrent: Tensor::from_shape_vec(&[4 * units, units], fill(4 * units * units, 0.23))
                .unwrap(),
            bias: Tensor::from_vec(fill(4 * units, 0.11)),
        }
    }

    fn fwd(input: &Tensor, p: &LstmParams, return_seq: bool) -> Result<(Tensor, LstmCache)> {
        lstm_forward(input, &p.w_input, &p.w_recurrent, &p.bias, return_seq)
    }

    #[test]
    fn matches_scalar_reference() {
        let (t, feat, units) = (5, 3, 4);
        let x: Vec<f64> = (0..t * feat).map(|i| ((i as f64) * 0.19).cos()).collect();
        let params = demo_params(units, feat);
        let input = Tensor::from_shape_vec(&[t, feat], x.clone()).unwrap();

        let (last, _) = fwd(&input, &params, false).unwrap();
        let (seq, _) = fwd(&input, &params, true).unwrap();
        let (ref_last, ref_all) = reference_forward(&x, t, feat, &params);

        assert_eq!(last.shape(), &[units]);
        assert_eq!(seq.shape(), &[t, units]);
        for j in 0..units {
            assert!((last.data()[j] - ref_last[j]).abs() < 1e-12);
        }
        for (a, b) in seq.data().iter().zip(&ref_all) {
            assert!((a - b).abs() < 1e-12);
        }
        // Final row of the sequence equals the final-state output.
        let tail = &seq.data()[(t - 1) * units..];
        assert_eq!(tail, last.data());
    }

    #[test]
    fn batch_matches_per_sample() {
        let (t, feat, units) = (6, 2, 3);
        let params = demo_params(units, feat);
        let xa: Vec<f64> = (0..t * feat).map(|i| ((i as f64) * 0.31).sin()).collect();
        let xb: Vec<f64> = (0..t * feat).map(|i| ((i as f64) * 0.07).cos()).collect();
        let a = Tensor::from_shape_vec(&[t, feat], xa.clone()).unwrap();
        let b = Tensor::from_shape_vec(&[t, feat], xb.clone()).unwrap();
        let batch = Tensor::from_shape_vec(&[2, t, feat], [xa, xb].concat()).unwrap();

        let (ya, _) = fwd(&a, &params, true).unwrap();
        let (yb, _) = fwd(&b, &params, true).unwrap();
        let (ybatch, _) = fwd(&batch, &params, true).unwrap();
        assert_eq!(ybatch.shape(), &[2, t, units]);
        for (i, &v) in ya.data().iter().enumerate() {
            assert!((ybatch.data()[i] - v).abs() < 1e-12);
        }
        for (i, &v) in yb.data().iter().enumerate() {
            assert!((ybatch.data()[t * units + i] - v).abs() < 1e-12);
        }
    }

    #[test]
    fn gradients_match_finite_differences() {
        let h = 1e-5;
        let (t, feat, units) = (4, 2, 3);
        let params = demo_params(units, feat);
        let x: Vec<f64> = (0..t * feat).map(|i| ((i as f64) * 0.41).sin()).collect();
        let input = Tensor::from_shape_vec(&[t, feat], x).unwrap();

        for return_seq in [false, true] {
            // Objective 0.5‖y‖² so that dy = y.
            let (y, cache) = fwd(&input, &params, return_seq).unwrap();
            let grads = lstm_backward(
                &input,
                &params.w_input,
                &params.w_recurrent,
                &params.bias,
                &cache,
                return_seq,
                &y,
                true,
            )
            .unwrap();
            let loss = |inp: &Tensor, p: &LstmParams| -> f64 {
                fwd(inp, p, return_seq).unwrap().0.squared_norm() * 0.5
            };

            let fd_check = |analytic: &Tensor, name: &str, perturb: &dyn Fn(f64, usize) -> (Tensor, LstmParams)| {
                for i in 0..analytic.numel() {
                    let (ip, pp) = perturb(h, i);
                    let (im, pm) = perturb(-h, i);
                    let fd = (loss(&ip, &pp) - loss(&im, &pm)) / (2.0 * h);
                    let a = analytic.data()[i];
                    assert!(
                        (a - fd).abs() <= 1e-6 * (1.0 + fd.abs()),
                        "{name}[{i}] (return_seq={return_seq}): analytic {a}, fd {fd}"
                    );
                }
            };

            fd_check(grads.d_input.as_ref().unwrap(), "dx", &|d, i| {
                let mut inp = input.clone();
                inp.data_mut()[i] += d;
                (inp, params.clone())
            });
            fd_check(&grads.d_w_input, "dwx", &|d, i| {
                let mut p = params.clone();
                p.w_input.data_mut()[i] += d;
                (input.clone(), p)
            });
            fd_check(&grads.d_w_recurrent, "dwh", &|d, i| {
                let mut p = params.clone();
                p.w_recurrent.data_mut()[i] += d;
                (input.clone(), p)
            });
            fd_check(&grads.d_bias, "dbias", &|d, i| {
                let mut p = params.clone();
                p.bias.data_mut()[i] += d;
                (input.clone(), p)
            });
        }
    }

    #[test]
    fn rejects_inconsistent_shapes() {
        let params = LstmParams::zeros(3, 2);
        let bad_feat = Tensor::zeros(&[5, 4]);
        assert!(fwd(&bad_feat, &params, false).is_err());
        let mut broken = params.clone();
        broken.bias = Tensor::zeros(&[5]);
        assert!(fwd(&Tensor::zeros(&[5, 2]), &broken, false).is_err());
    }

    #[test]
    fn benchmark_shapes() {
        // Sequence head: [6250, 19] -> [6250, units] with return_sequence,
        // [units] without.
        let params = LstmParams::zeros(8, 19);
        let input = Tensor::zeros(&[100, 19]);
        let (seq, _) = fwd(&input, &params, true).unwrap();
        assert_eq!(seq.shape(), &[100, 8]);
        let (last, _) = fwd(&input, &params, false).unwrap();
        assert_eq!(last.shape(), &[8]);
    }
}
