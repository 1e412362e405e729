//! Tree ensembles: bagging, random forest, extremely randomized trees.
//!
//! Shared vote rule: each member tree predicts a label (leaf majority, ties
//! to SZ), the ensemble takes the majority of member labels, and a tied
//! member vote again resolves to SZ. Counting votes makes predictions
//! invariant to the order of the members.

use rand::Rng as _;
use serde::Serialize;

use crate::data::Label;
use crate::error::{Error, Result};
use crate::rng::derived_rng;

use super::tree::{fit_tree, FeatureMode, ThresholdMode, TreeConfig, TreeNode};
use super::{check_rows, BaselineHyperparams, BaselineKind};

/// A fitted bagging / random-forest / extra-trees ensemble.
#[derive(Clone, Debug, Serialize)]
pub struct EnsembleModel {
    pub kind: BaselineKind,
    pub dim: usize,
    pub n_estimators: usize,
    pub seed: u64,
    pub trees: Vec<TreeNode>,
}

impl EnsembleModel {
    /// Fits `hyper.n_estimators` member trees. Member `e` draws all its
    /// randomness (bootstrap rows, feature subsets, random thresholds) from
    /// a stream derived as `(seed, "<kind>-member", e)`, so members are
    /// independent and the whole fit is reproducible.
    pub fn fit(
        kind: BaselineKind,
        features: &[&[f64]],
        labels: &[Label],
        hyper: &BaselineHyperparams,
        seed: u64,
    ) -> Result<EnsembleModel> {
        let dim = check_rows(features, labels)?;
        let n = features.len();
        let mtry = (dim as f64).sqrt().floor().max(1.0) as usize;
        let (bootstrap, cfg) = match kind {
            BaselineKind::Bagging => (
                true,
                TreeConfig {
                    features: FeatureMode::All,
                    thresholds: ThresholdMode::Midpoints,
                    ..TreeConfig::exhaustive(hyper)
                },
            ),
            BaselineKind::Rforest => (
                true,
                TreeConfig {
                    features: FeatureMode::RandomSubset(mtry),
                    thresholds: ThresholdMode::Midpoints,
                    ..TreeConfig::exhaustive(hyper)
                },
            ),
            BaselineKind::Etrees => (
                false,
                TreeConfig {
                    features: FeatureMode::RandomSubset(mtry),
                    thresholds: ThresholdMode::UniformRandom,
                    ..TreeConfig::exhaustive(hyper)
                },
            ),
            other => {
                return Err(Error::config(format!(
                    "'{other}' is not an ensemble method"
                )))
            }
        };

        let tag = format!("{kind}-member");
        let mut trees = Vec::with_capacity(hyper.n_estimators);
        for e in 0..hyper.n_estimators {
            let mut rng = derived_rng(seed, &tag, e as u64);
            let rows: Vec<usize> = if bootstrap {
                (0..n).map(|_| rng.gen_range(0..n)).collect()
            } else {
                (0..n).collect()
            };
            trees.push(fit_tree(features, labels, &rows, &cfg, &mut rng));
        }
        Ok(EnsembleModel {
            kind,
            dim,
            n_estimators: hyper.n_estimators,
            seed,
            trees,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn sz_votes(&self, x: &[f64]) -> usize {
        self.trees
            .iter()
            .filter(|t| t.predict(x) == Label::Sz)
            .count()
    }

    /// Majority vote over the member trees; ties go to SZ.
    pub fn predict(&self, x: &[f64]) -> Label {
        if 2 * self.sz_votes(x) >= self.trees.len() {
            Label::Sz
        } else {
            Label::Hc
        }
    }

    /// Fraction of member trees voting SZ.
    pub fn score(&self, x: &[f64]) -> f64 {
        self.sz_votes(x) as f64 / self.trees.len() as f64
    }
}
