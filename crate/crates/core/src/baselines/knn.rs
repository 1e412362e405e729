//! k-nearest-neighbour voting classifier.

use serde::{Deserialize, Serialize};

use crate::data::Label;
use crate::error::{Error, Result};

use super::{check_rows, dist_sq, BaselineHyperparams};

/// Fitted KNN state: the training rows themselves.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct KnnModel {
    pub k: usize,
    pub rows: Vec<Vec<f64>>,
    pub labels: Vec<Label>,
}

impl KnnModel {
    pub fn fit(
        features: &[&[f64]],
        labels: &[Label],
        hyper: &BaselineHyperparams,
    ) -> Result<KnnModel> {
        check_rows(features, labels)?;
        if hyper.knn_k > features.len() {
            return Err(Error::config(format!(
                "knn_k = {} exceeds the training-set size {}",
                hyper.knn_k,
                features.len()
            )));
        }
        Ok(KnnModel {
            k: hyper.knn_k,
            rows: features.iter().map(|r| r.to_vec()).collect(),
            labels: labels.to_vec(),
        })
    }

    pub fn dim(&self) -> usize {
        self.rows[0].len()
    }

    /// The `k` nearest training rows by Euclidean distance; equal distances
    /// at the cut-off resolve by training order, so the neighbour set is
    /// deterministic.
    fn neighbours(&self, x: &[f64]) -> Vec<(f64, Label)> {
        let mut dists: Vec<(f64, usize)> = self
            .rows
            .iter()
            .enumerate()
            .map(|(i, row)| (dist_sq(row, x), i))
            .collect();
        dists.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        dists
            .into_iter()
            .take(self.k)
            .map(|(d2, i)| (d2.sqrt(), self.labels[i]))
            .collect()
    }

    /// Majority vote among the `k` nearest; a tied vote goes to the class
    /// with the smaller summed neighbour distance, then to SZ.
    pub fn predict(&self, x: &[f64]) -> Label {
        let mut votes = [0usize; 2];
        let mut sums = [0.0f64; 2];
        for (d, label) in self.neighbours(x) {
            votes[label.index()] += 1;
            sums[label.index()] += d;
        }
        match votes[Label::Sz.index()].cmp(&votes[Label::Hc.index()]) {
            std::cmp::Ordering::Greater => Label::Sz,
            std::cmp::Ordering::Less => Label::Hc,
            std::cmp::Ordering::Equal => {
                if sums[Label::Sz.index()] <= sums[Label::Hc.index()] {
                    Label::Sz
                } else {
                    Label::Hc
                }
            }
        }
    }

    /// SZ fraction among the `k` nearest neighbours.
    pub fn score(&self, x: &[f64]) -> f64 {
        let sz = self
            .neighbours(x)
            .iter()
            .filter(|(_, l)| *l == Label::Sz)
            .count();
        sz as f64 / self.k as f64
    }
}
