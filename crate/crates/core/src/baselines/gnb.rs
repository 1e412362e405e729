//! Gaussian naive Bayes.

use serde::{Deserialize, Serialize};

use crate::data::Label;
use crate::error::{Error, Result};

use super::check_rows;

/// Relative variance floor: per-class, per-feature variances are raised to
/// at least `VAR_FLOOR_REL` times the largest overall feature variance, so
/// constant features never divide by zero.
pub const VAR_FLOOR_REL: f64 = 1e-9;

/// Fitted per-class Gaussian statistics.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GnbModel {
    /// Log class priors, `[sz, hc]`, from training frequencies.
    pub log_priors: [f64; 2],
    /// Per-class feature means, `[sz, hc]`.
    pub means: [Vec<f64>; 2],
    /// Per-class feature variances after flooring, `[sz, hc]`.
    pub variances: [Vec<f64>; 2],
}

impl GnbModel {
    pub fn fit(features: &[&[f64]], labels: &[Label]) -> Result<GnbModel> {
        let dim = check_rows(features, labels)?;
        let mut counts = [0usize; 2];
        for l in labels {
            counts[l.index()] += 1;
        }
        if counts[0] == 0 || counts[1] == 0 {
            return Err(Error::data(
                "naive Bayes needs both classes in the training set".to_string(),
            ));
        }

        let mut means = [vec![0.0; dim], vec![0.0; dim]];
        for (row, l) in features.iter().zip(labels) {
            let m = &mut means[l.index()];
            for (acc, v) in m.iter_mut().zip(*row) {
                *acc += v;
            }
        }
        for c in 0..2 {
            for v in &mut means[c] {
                *v /= counts[c] as f64;
            }
        }

        let mut variances = [vec![0.0; dim], vec![0.0; dim]];
        for (row, l) in features.iter().zip(labels) {
            let c = l.index();
            for f in 0..dim {
                let d = row[f] - means[c][f];
                variances[c][f] += d * d;
            }
        }
        for c in 0..2 {
            for v in &mut variances[c] {
                *v /= counts[c] as f64;
            }
        }

        // Overall per-feature population variance, for the floor.
        let n = features.len() as f64;
        let mut overall_mean = vec![0.0; dim];
        for row in features {
            for (acc, v) in overall_mean.iter_mut().zip(*row) {
                *acc += v;
            }
        }
        for v in &mut overall_mean {
            *v /= n;
        }
        let mut max_var = 0.0f64;
        for f in 0..dim {
            let mut acc = 0.0;
            for row in features {
                let d = row[f] - overall_mean[f];
                acc += d * d;
            }
            max_var = max_var.max(acc / n);
        }
        let floor = (VAR_FLOOR_REL * max_var).max(f64::MIN_POSITIVE);
        for c in 0..2 {
            for v in &mut variances[c] {
                *v = v.max(floor);
            }
        }

        Ok(GnbModel {
            log_priors: [
                (counts[0] as f64 / n).ln(),
                (counts[1] as f64 / n).ln(),
            ],
            means,
            variances,
        })
    }

    pub fn dim(&self) -> usize {
        self.means[0].len()
    }

    /// Joint log-likelihoods `[ln p(x, SZ), ln p(x, HC)]`.
    pub fn log_likelihoods(&self, x: &[f64]) -> [f64; 2] {
        let mut ll = self.log_priors;
        for c in 0..2 {
            for (f, v) in x.iter().enumerate() {
                let var = self.variances[c][f];
                let d = v - self.means[c][f];
                ll[c] += -0.5 * (std::f64::consts::TAU * var).ln() - d * d / (2.0 * var);
            }
        }
        ll
    }

    /// Class with the larger joint log-likelihood; a tie goes to SZ.
    pub fn predict(&self, x: &[f64]) -> Label {
        let [sz, hc] = self.log_likelihoods(x);
        if sz >= hc {
            Label::Sz
        } else {
            Label::Hc
        }
    }

    /// Posterior probability of SZ.
    pub fn score(&self, x: &[f64]) -> f64 {
        let [sz, hc] = self.log_likelihoods(x);
        1.0 / (1.0 + (hc - sz).exp())
    }
}
