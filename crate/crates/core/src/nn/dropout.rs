//! Inverted dropout.
//!
//! During training each element is zeroed independently with probability
//! `rate` and the survivors are scaled by `1/(1-rate)`, so activations keep
//! their expected value and inference needs no rescaling. Evaluation mode
//! never calls into this module — the layer is an exact identity there.

use rand::Rng as _;

use crate::error::{Error, Result};
use crate::rng::Rng;
use crate::tensor::Tensor;

/// Per-element keep/drop factors sampled for one forward pass: `0` for
/// dropped positions, `1/(1-rate)` for kept ones. The same mask multiplies
/// the upstream gradient in the backward pass.
#[derive(Clone, Debug)]
pub struct DropoutMask {
    factors: Vec<f64>,
}

impl DropoutMask {
    pub fn factors(&self) -> &[f64] {
        &self.factors
    }
}

/// Samples a mask for `numel` elements. `rate` must lie in `[0, 1)`.
pub fn sample_mask(rng: &mut Rng, numel: usize, rate: f64) -> Result<DropoutMask> {
    if !(0.0..1.0).contains(&rate) {
        return Err(Error::config(format!(
            "dropout rate must be in [0, 1), got {rate}"
        )));
    }
    let keep_scale = 1.0 / (1.0 - rate);
    let factors = (0..numel)
        .map(|_| {
            if rng.gen::<f64>() < rate {
                0.0
            } else {
                keep_scale
            }
        })
        .collect();
    Ok(DropoutMask { factors })
}

/// Multiplies `input` by the mask element-wise. Used for both the forward
/// value and the gradient (the op is linear in its input).
pub fn apply_mask(input: &Tensor, mask: &DropoutMask) -> Result<Tensor> {
    if input.numel() != mask.factors.len() {
        return Err(Error::shape(format!(
            "dropout mask covers {} elements, input has {}",
            mask.factors.len(),
            input.numel()
        )));
    }
    let data = input
        .data()
        .iter()
        .zip(&mask.factors)
        .map(|(&x, &f)| x * f)
        .collect();
    Tensor::from_shape_vec(input.shape(), data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;

    #[test]
    fn rejects_invalid_rates() {
        let mut rng = rng_from_seed(1);
        assert!(sample_mask(&mut rng, 4, 1.0).is_err());
        assert!(sample_mask(&mut rng, 4, -0.1).is_err());
        assert!(sample_mask(&mut rng, 4, 0.0).is_ok());
    }

    #[test]
    fn rate_zero_keeps_everything() {
        let mut rng = rng_from_seed(2);
        let mask = sample_mask(&mut rng, 8, 0.0).unwrap();
        assert!(mask.factors().iter().all(|&f| f == 1.0));
    }

    #[test]
    fn factors_are_zero_or_inverse_keep() {
        let mut rng = rng_from_seed(3);
        let mask = sample_mask(&mut rng, 1000, 0.25).unwrap();
        let scale = 1.0 / 0.75;
        for &f in mask.factors() {
            assert!(f == 0.0 || (f - scale).abs() < 1e-15);
        }
    }

    #[test]
    fn preserves_expected_value() {
        // Monte-Carlo check of the inverted-dropout scaling on a large mask.
        let mut rng = rng_from_seed(4);
        let n = 1_000_000;
        let mask = sample_mask(&mut rng, n, 0.5).unwrap();
        let ones = Tensor::filled(&[n], 1.0);
        let dropped = apply_mask(&ones, &mask).unwrap();
        let mean = dropped.data().iter().sum::<f64>() / n as f64;
        assert!(
            (mean - 1.0).abs() < 0.01,
            "expected mean within 1% of 1.0, got {mean}"
        );
    }

    #[test]
    fn same_seed_same_mask() {
        let m1 = sample_mask(&mut rng_from_seed(7), 256, 0.5).unwrap();
        let m2 = sample_mask(&mut rng_from_seed(7), 256, 0.5).unwrap();
        assert_eq!(m1.factors(), m2.factors());
    }
}
