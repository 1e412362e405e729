//! Binary cross-entropy loss.
//!
//! Predictions are clamped to `[ε, 1-ε]` with `ε = 1e-7` before the
//! logarithms, matching the guard used by mainstream framework
//! implementations. Outside the clamp range the loss is flat, so the
//! gradient there is exactly zero.

use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Clamp margin applied to predictions before taking logarithms.
pub const BCE_EPSILON: f64 = 1e-7;

/// How element losses combine into the scalar loss.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Reduction {
    /// Average over every element (per-sample × per-unit).
    Mean,
    /// Plain sum; used when a caller accumulates micro-batches itself.
    Sum,
}

fn validate(pred: &Tensor, target: &Tensor) -> Result<()> {
    if pred.shape() != target.shape() {
        return Err(Error::shape(format!(
            "bce: prediction shape {:?} does not match target {:?}",
            pred.shape(),
            target.shape()
        )));
    }
    if pred.numel() == 0 {
        return Err(Error::shape("bce: empty prediction".to_string()));
    }
    if !target.data().iter().all(|&t| (0.0..=1.0).contains(&t)) {
        return Err(Error::data("bce: targets must lie in [0, 1]".to_string()));
    }
    Ok(())
}

/// Scalar binary cross-entropy between `pred` and `target` (equal shapes;
/// any rank — multi-unit heads contribute one term per unit).
pub fn bce_loss(pred: &Tensor, target: &Tensor, reduction: Reduction) -> Result<f64> {
    validate(pred, target)?;
    let mut total = 0.0;
    for (&p, &t) in pred.data().iter().zip(target.data()) {
        let p = p.clamp(BCE_EPSILON, 1.0 - BCE_EPSILON);
        total -= t * p.ln() + (1.0 - t) * (1.0 - p).ln();
    }
    Ok(match reduction {
        Reduction::Mean => total / pred.numel() as f64,
        Reduction::Sum => total,
    })
}

/// Gradient of [`bce_loss`] with respect to the predictions.
pub fn bce_backward(pred: &Tensor, target: &Tensor, reduction: Reduction) -> Result<Tensor> {
    validate(pred, target)?;
    let weight = match reduction {
        Reduction::Mean => 1.0 / pred.numel() as f64,
        Reduction::Sum => 1.0,
    };
    let mut grad = vec![0.0; pred.numel()];
    for (i, (&p, &t)) in pred.data().iter().zip(target.data()).enumerate() {
        // Flat (zero gradient) where the clamp is active.
        if (BCE_EPSILON..=1.0 - BCE_EPSILON).contains(&p) {
            grad[i] = weight * (p - t) / (p * (1.0 - p));
        }
    }
    Tensor::from_shape_vec(pred.shape(), grad)
}
