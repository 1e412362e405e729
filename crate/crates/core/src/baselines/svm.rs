//! Soft-margin RBF support-vector machine, fitted with sequential minimal
//! optimization (working set of two, KKT tolerance check per sample).

use rand::Rng as _;
use serde::Serialize;

use crate::data::Label;
use crate::error::{Error, Result};
use crate::rng::derived_rng;

use super::{check_rows, dist_sq, dot, BaselineHyperparams};

/// Minimum α for a training row to be kept as a support vector.
const SUPPORT_EPS: f64 = 1e-12;

/// Cap on the dense kernel cache (bytes).
const KERNEL_CACHE_BYTES: usize = 1 << 30;

/// Fitted SVM state. The JSON form records the support indices (into the
/// fit-time training order), coefficients and bias; the support-vector
/// contents themselves stay in memory only.
#[derive(Clone, Debug, Serialize)]
pub struct SvmModel {
    pub dim: usize,
    pub c: f64,
    /// RBF width, `gamma = 1 / (dim · Var(all feature values))`.
    pub gamma: f64,
    pub bias: f64,
    /// Whether SMO reached a full pass with no updates within the budget.
    pub converged: bool,
    pub passes_used: usize,
    pub support_indices: Vec<usize>,
    pub alpha: Vec<f64>,
    /// Class sign per support vector: SZ = +1, HC = −1.
    pub y: Vec<f64>,
    #[serde(skip)]
    support_vectors: Vec<Vec<f64>>,
}

impl SvmModel {
    pub fn fit(
        features: &[&[f64]],
        labels: &[Label],
        hyper: &BaselineHyperparams,
        seed: u64,
    ) -> Result<SvmModel> {
        let dim = check_rows(features, labels)?;
        let n = features.len();
        let c = hyper.svm_c;
        let tol = hyper.svm_tol;
        let y: Vec<f64> = labels
            .iter()
            .map(|l| if *l == Label::Sz { 1.0 } else { -1.0 })
            .collect();
        if !y.contains(&1.0) || !y.contains(&-1.0) {
            return Err(Error::data(
                "SVM needs both classes in the training set".to_string(),
            ));
        }

        let gamma = gamma_scale(features, dim);

        if n * n * 8 > KERNEL_CACHE_BYTES {
            return Err(Error::config(format!(
                "training set of {n} rows exceeds the dense kernel cache"
            )));
        }
        let norms: Vec<f64> = features.iter().map(|r| dot(r, r)).collect();
        let mut kernel = vec![0.0f64; n * n];
        for i in 0..n {
            kernel[i * n + i] = 1.0;
            for j in 0..i {
                let d2 = norms[i] + norms[j] - 2.0 * dot(features[i], features[j]);
                let k = (-gamma * d2.max(0.0)).exp();
                kernel[i * n + j] = k;
                kernel[j * n + i] = k;
            }
        }

        let mut alpha = vec![0.0f64; n];
        let mut bias = 0.0f64;
        // f[i] = Σ_j α_j·y_j·K(j,i) + b, kept incrementally current.
        let mut f = vec![0.0f64; n];
        let mut rng = derived_rng(seed, "svm-smo", 0);
        let mut converged = false;
        let mut passes_used = 0;

        for pass in 0..hyper.svm_max_passes {
            let mut changed = 0usize;
            for i in 0..n {
                let e_i = f[i] - y[i];
                let r = y[i] * e_i;
                let violates = (r < -tol && alpha[i] < c) || (r > tol && alpha[i] > 0.0);
                if !violates {
                    continue;
                }
                let mut j = rng.gen_range(0..n - 1);
                if j >= i {
                    j += 1;
                }
                let e_j = f[j] - y[j];
                let (a_i, a_j) = (alpha[i], alpha[j]);
                let (lo, hi) = if y[i] != y[j] {
                    ((a_j - a_i).max(0.0), (c + a_j - a_i).min(c))
                } else {
                    ((a_i + a_j - c).max(0.0), (a_i + a_j).min(c))
                };
                if hi - lo < SUPPORT_EPS {
                    continue;
                }
                let k_ii = kernel[i * n + i];
                let k_jj = kernel[j * n + j];
                let k_ij = kernel[i * n + j];
                let eta = 2.0 * k_ij - k_ii - k_jj;
                if eta >= 0.0 {
                    continue; // only possible for (near-)duplicate rows
                }
                let a_j_new = (a_j - y[j] * (e_i - e_j) / eta).clamp(lo, hi);
                if (a_j_new - a_j).abs() < 1e-5 {
                    continue;
                }
                let a_i_new = a_i + y[i] * y[j] * (a_j - a_j_new);
                let d_i = y[i] * (a_i_new - a_i);
                let d_j = y[j] * (a_j_new - a_j);
                let b1 = bias - e_i - d_i * k_ii - d_j * k_ij;
                let b2 = bias - e_j - d_i * k_ij - d_j * k_jj;
                let b_new = if a_i_new > 0.0 && a_i_new < c {
                    b1
                } else if a_j_new > 0.0 && a_j_new < c {
                    b2
                } else {
                    (b1 + b2) / 2.0
                };
                let d_b = b_new - bias;
                for (k, fk) in f.iter_mut().enumerate() {
                    *fk += d_i * kernel[i * n + k] + d_j * kernel[j * n + k] + d_b;
                }
                alpha[i] = a_i_new;
                alpha[j] = a_j_new;
                bias = b_new;
                changed += 1;
            }
            passes_used = pass + 1;
            if changed == 0 {
                converged = true;
                break;
            }
        }

        let mut support_indices = Vec::new();
        let mut sv_alpha = Vec::new();
        let mut sv_y = Vec::new();
        let mut support_vectors = Vec::new();
        for i in 0..n {
            if alpha[i] > SUPPORT_EPS {
                support_indices.push(i);
                sv_alpha.push(alpha[i]);
                sv_y.push(y[i]);
                support_vectors.push(features[i].to_vec());
            }
        }

        Ok(SvmModel {
            dim,
            c,
            gamma,
            bias,
            converged,
            passes_used,
            support_indices,
            alpha: sv_alpha,
            y: sv_y,
            support_vectors,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Signed margin `Σ αᵢyᵢK(xᵢ, x) + b`; positive means SZ.
    pub fn decision_value(&self, x: &[f64]) -> f64 {
        let mut acc = self.bias;
        for ((sv, a), y) in self.support_vectors.iter().zip(&self.alpha).zip(&self.y) {
            acc += a * y * (-self.gamma * dist_sq(sv, x)).exp();
        }
        acc
    }

    pub fn predict(&self, x: &[f64]) -> Label {
        if self.decision_value(x) >= 0.0 {
            Label::Sz
        } else {
            Label::Hc
        }
    }

    pub fn warning(&self) -> Option<String> {
        if self.converged {
            None
        } else {
            Some(format!(
                "SVM SMO stopped after {} passes without reaching the KKT tolerance; \
                 reporting the final iterate",
                self.passes_used
            ))
        }
    }
}

/// `gamma = 1 / (dim · Var)` with `Var` the population variance of every
/// feature value in the training matrix; degenerate (constant) data falls
/// back to `gamma = 1`.
fn gamma_scale(features: &[&[f64]], dim: usize) -> f64 {
    let count = (features.len() * dim) as f64;
    let mut mean = 0.0;
    for row in features {
        for v in *row {
            mean += v;
        }
    }
    mean /= count;
    let mut var = 0.0;
    for row in features {
        for v in *row {
            let d = v - mean;
            var += d * d;
        }
    }
    var /= count;
    let gamma = 1.0 / (dim as f64 * var);
    if gamma.is_finite() && gamma > 0.0 {
        gamma
    } else {
        1.0
    }
}
