//! CART decision trees with Gini impurity.
//!
//! One grower serves four methods: the plain decision tree (all features,
//! exhaustive midpoint thresholds), bagging members (same grower on a
//! bootstrap), random-forest members (random √d feature subset per split),
//! and extremely-randomized members (random subset *and* one uniformly
//! random threshold per candidate feature, best-of-random by Gini).

use serde::{Deserialize, Serialize};

use crate::data::Label;
use crate::error::Result;
use crate::rng::Rng;

use super::{check_rows, BaselineHyperparams};

/// A node of a fitted tree. Leaves carry the class counts of the training
/// rows that reached them (`[sz, hc]`, both never simultaneously zero);
/// internal nodes route `x[feature] <= threshold` to the left child.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub enum TreeNode {
    Leaf {
        counts: [usize; 2],
    },
    Split {
        feature: usize,
        threshold: f64,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
}

impl TreeNode {
    /// Leaf class counts for one query.
    pub fn leaf_counts(&self, x: &[f64]) -> [usize; 2] {
        match self {
            TreeNode::Leaf { counts } => *counts,
            TreeNode::Split {
                feature,
                threshold,
                left,
                right,
            } => {
                if x[*feature] <= *threshold {
                    left.leaf_counts(x)
                } else {
                    right.leaf_counts(x)
                }
            }
        }
    }

    /// Majority label at the reached leaf; ties go to SZ.
    pub fn predict(&self, x: &[f64]) -> Label {
        let [sz, hc] = self.leaf_counts(x);
        if sz >= hc {
            Label::Sz
        } else {
            Label::Hc
        }
    }

    /// SZ fraction at the reached leaf.
    pub fn prob_sz(&self, x: &[f64]) -> f64 {
        let [sz, hc] = self.leaf_counts(x);
        sz as f64 / (sz + hc) as f64
    }

    /// Number of levels below and including this node (a leaf has depth 0).
    pub fn depth(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 0,
            TreeNode::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }
}

/// Which features a split may consider.
#[derive(Clone, Copy, Debug)]
pub(crate) enum FeatureMode {
    /// Every feature (plain CART, bagging members).
    All,
    /// A fresh random subset of the given size per split.
    RandomSubset(usize),
}

/// How candidate thresholds are generated per considered feature.
#[derive(Clone, Copy, Debug)]
pub(crate) enum ThresholdMode {
    /// Midpoints of consecutive distinct sorted values (exhaustive CART).
    Midpoints,
    /// One uniformly random threshold in `[min, max)` of the node's values.
    UniformRandom,
}

#[derive(Clone, Copy, Debug)]
pub(crate) struct TreeConfig {
    pub min_split: usize,
    pub max_depth: Option<usize>,
    pub features: FeatureMode,
    pub thresholds: ThresholdMode,
}

impl TreeConfig {
    pub(crate) fn exhaustive(hyper: &BaselineHyperparams) -> TreeConfig {
        TreeConfig {
            min_split: hyper.tree_min_split,
            max_depth: hyper.tree_max_depth,
            features: FeatureMode::All,
            thresholds: ThresholdMode::Midpoints,
        }
    }
}

/// Gini impurity of a two-class count vector: `1 - p_sz² - p_hc²`.
pub(crate) fn gini(counts: [usize; 2]) -> f64 {
    let n = (counts[0] + counts[1]) as f64;
    if n == 0.0 {
        return 0.0;
    }
    let p0 = counts[0] as f64 / n;
    let p1 = counts[1] as f64 / n;
    1.0 - p0 * p0 - p1 * p1
}

/// Grows one tree on the rows named by `rows` (duplicates allowed, as in a
/// bootstrap sample). Candidate splits are compared by the summed child
/// impurity weighted by child size; exact ties keep the earliest candidate,
/// which with an ascending feature/threshold scan means the lowest feature
/// index, then the lowest threshold. A zero-gain split is still taken when
/// the node is impure, so structured but Gini-flat sets (XOR) recurse
/// correctly; recursion always terminates because both children of any
/// accepted split are non-empty and strictly smaller than the node.
pub(crate) fn fit_tree(
    features: &[&[f64]],
    labels: &[Label],
    rows: &[usize],
    cfg: &TreeConfig,
    rng: &mut Rng,
) -> TreeNode {
    let dim = features[0].len();
    let mut scratch: Vec<(f64, Label)> = Vec::new();
    grow(features, labels, rows.to_vec(), dim, cfg, rng, 0, &mut scratch)
}

#[allow(clippy::too_many_arguments)]
fn grow(
    features: &[&[f64]],
    labels: &[Label],
    rows: Vec<usize>,
    dim: usize,
    cfg: &TreeConfig,
    rng: &mut Rng,
    depth: usize,
    scratch: &mut Vec<(f64, Label)>,
) -> TreeNode {
    let counts = count_labels(labels, &rows);
    let pure = counts[0] == 0 || counts[1] == 0;
    let depth_capped = cfg.max_depth.is_some_and(|d| depth >= d);
    if pure || rows.len() < cfg.min_split || depth_capped {
        return TreeNode::Leaf { counts };
    }

    let candidate_features: Vec<usize> = match cfg.features {
        FeatureMode::All => (0..dim).collect(),
        FeatureMode::RandomSubset(m) => {
            let m = m.min(dim).max(1);
            let mut picked = rand::seq::index::sample(rng, dim, m).into_vec();
            // Ascending order keeps the tie-break rule "lowest feature wins"
            // independent of draw order.
            picked.sort_unstable();
            picked
        }
    };

    let mut best: Option<(f64, usize, f64)> = None; // (weighted child impurity, feature, threshold)
    for &f in &candidate_features {
        match cfg.thresholds {
            ThresholdMode::Midpoints => {
                scratch.clear();
                scratch.extend(rows.iter().map(|&r| (features[r][f], labels[r])));
                scratch.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
                let mut left = [0usize; 2];
                let mut right = counts;
                for i in 0..scratch.len() - 1 {
                    let (v, lab) = scratch[i];
                    left[lab.index()] += 1;
                    right[lab.index()] -= 1;
                    let next = scratch[i + 1].0;
                    if next > v {
                        let threshold = v + (next - v) / 2.0;
                        consider(&mut best, weighted_impurity(left, right), f, threshold);
                    }
                }
            }
            ThresholdMode::UniformRandom => {
                let mut lo = f64::INFINITY;
                let mut hi = f64::NEG_INFINITY;
                for &r in &rows {
                    let v = features[r][f];
                    lo = lo.min(v);
                    hi = hi.max(v);
                }
                if !(hi > lo) {
                    continue; // constant feature at this node
                }
                let threshold = rand::Rng::gen_range(rng, lo..hi);
                let mut left = [0usize; 2];
                let mut right = [0usize; 2];
                for &r in &rows {
                    let side = if features[r][f] <= threshold {
                        &mut left
                    } else {
                        &mut right
                    };
                    side[labels[r].index()] += 1;
                }
                consider(&mut best, weighted_impurity(left, right), f, threshold);
            }
        }
    }

    let Some((_, feature, threshold)) = best else {
        // No feature varies across the node's rows: mixed duplicate points.
        return TreeNode::Leaf { counts };
    };

    let (mut left_rows, mut right_rows) = (Vec::new(), Vec::new());
    for &r in &rows {
        if features[r][feature] <= threshold {
            left_rows.push(r);
        } else {
            right_rows.push(r);
        }
    }
    drop(rows);
    let left = grow(features, labels, left_rows, dim, cfg, rng, depth + 1, scratch);
    let right = grow(features, labels, right_rows, dim, cfg, rng, depth + 1, scratch);
    TreeNode::Split {
        feature,
        threshold,
        left: Box::new(left),
        right: Box::new(right),
    }
}

fn consider(best: &mut Option<(f64, usize, f64)>, impurity: f64, feature: usize, threshold: f64) {
    let better = match best {
        None => true,
        Some((b, _, _)) => impurity < *b,
    };
    if better {
        *best = Some((impurity, feature, threshold));
    }
}

/// Size-weighted summed child impurity: `n_l·G(left) + n_r·G(right)`.
/// (Dividing by the node size would not change the argmin.)
fn weighted_impurity(left: [usize; 2], right: [usize; 2]) -> f64 {
    let nl = (left[0] + left[1]) as f64;
    let nr = (right[0] + right[1]) as f64;
    nl * gini(left) + nr * gini(right)
}

fn count_labels(labels: &[Label], rows: &[usize]) -> [usize; 2] {
    let mut counts = [0usize; 2];
    for &r in rows {
        counts[labels[r].index()] += 1;
    }
    counts
}

/// A single exhaustive CART tree.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DtreeModel {
    pub dim: usize,
    pub min_split: usize,
    pub max_depth: Option<usize>,
    pub root: TreeNode,
}

impl DtreeModel {
    pub fn fit(
        features: &[&[f64]],
        labels: &[Label],
        hyper: &BaselineHyperparams,
    ) -> Result<DtreeModel> {
        let dim = check_rows(features, labels)?;
        let rows: Vec<usize> = (0..features.len()).collect();
        let cfg = TreeConfig::exhaustive(hyper);
        // Exhaustive growth draws nothing; any seed gives the same tree.
        let mut rng = crate::rng::rng_from_seed(0);
        let root = fit_tree(features, labels, &rows, &cfg, &mut rng);
        Ok(DtreeModel {
            dim,
            min_split: hyper.tree_min_split,
            max_depth: hyper.tree_max_depth,
            root,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn predict(&self, x: &[f64]) -> Label {
        self.root.predict(x)
    }

    pub fn score(&self, x: &[f64]) -> f64 {
        self.root.prob_sz(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;

    fn fit_plain(rows: &[Vec<f64>], labels: &[Label]) -> DtreeModel {
        let refs: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
        DtreeModel::fit(&refs, labels, &BaselineHyperparams::default()).unwrap()
    }

    #[test]
    fn pure_set_yields_a_single_leaf() {
        let rows = vec![vec![0.0, 1.0], vec![2.0, 3.0], vec![4.0, 5.0]];
        let labels = vec![Label::Sz; 3];
        let model = fit_plain(&rows, &labels);
        assert_eq!(model.root, TreeNode::Leaf { counts: [3, 0] });
        assert_eq!(model.predict(&[9.0, 9.0]), Label::Sz);
    }

    #[test]
    fn xor_needs_exactly_two_levels_and_fits_perfectly() {
        let rows = vec![
            vec![0.0, 0.0],
            vec![0.0, 1.0],
            vec![1.0, 0.0],
            vec![1.0, 1.0],
        ];
        let labels = vec![Label::Hc, Label::Sz, Label::Sz, Label::Hc];
        let model = fit_plain(&rows, &labels);
        assert_eq!(model.root.depth(), 2);
        for (row, want) in rows.iter().zip(&labels) {
            assert_eq!(model.predict(row), *want);
        }
        // Zero-gain root split on the lowest feature at the midpoint 0.5.
        match &model.root {
            TreeNode::Split {
                feature, threshold, ..
            } => {
                assert_eq!(*feature, 0);
                assert!((threshold - 0.5).abs() < 1e-12);
            }
            other => panic!("expected a split at the root, got {other:?}"),
        }
    }

    #[test]
    fn balanced_node_gini_is_one_half() {
        assert_eq!(gini([5, 5]), 0.5);
        assert_eq!(gini([7, 0]), 0.0);
        assert!((gini([1, 3]) - 0.375).abs() < 1e-15);
    }

    #[test]
    fn root_split_matches_an_exhaustive_oracle() {
        let mut rng = rng_from_seed(42);
        let n = 30;
        let dim = 4;
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| {
                (0..dim)
                    .map(|_| rand::Rng::gen_range(&mut rng, -1.0..1.0))
                    .collect()
            })
            .collect();
        let labels: Vec<Label> = (0..n)
            .map(|_| {
                if rand::Rng::gen_bool(&mut rng, 0.5) {
                    Label::Sz
                } else {
                    Label::Hc
                }
            })
            .collect();

        // Independent oracle: try every (feature, midpoint) pair by brute
        // force, recompute Gini from scratch, same tie rule.
        let mut oracle: Option<(f64, usize, f64)> = None;
        for f in 0..dim {
            let mut vals: Vec<f64> = rows.iter().map(|r| r[f]).collect();
            vals.sort_by(f64::total_cmp);
            vals.dedup();
            for w in vals.windows(2) {
                let thr = w[0] + (w[1] - w[0]) / 2.0;
                let mut l = [0usize; 2];
                let mut r = [0usize; 2];
                for (row, lab) in rows.iter().zip(&labels) {
                    if row[f] <= thr {
                        l[lab.index()] += 1;
                    } else {
                        r[lab.index()] += 1;
                    }
                }
                let imp = weighted_impurity(l, r);
                if oracle.is_none() || imp < oracle.unwrap().0 {
                    oracle = Some((imp, f, thr));
                }
            }
        }
        let (_, want_f, want_thr) = oracle.unwrap();

        let model = fit_plain(&rows, &labels);
        match &model.root {
            TreeNode::Split {
                feature, threshold, ..
            } => {
                assert_eq!(*feature, want_f);
                assert!((threshold - want_thr).abs() < 1e-12);
            }
            other => panic!("expected root split, got {other:?}"),
        }
        // Unbounded CART drives the training error to zero on distinct rows.
        for (row, want) in rows.iter().zip(&labels) {
            assert_eq!(model.predict(row), *want);
        }
    }

    #[test]
    fn serialized_nodes_reproduce_training_predictions() {
        let mut rng = rng_from_seed(3);
        let (rows, labels) = super::super::testutil::blobs(10, 3, 2.0, &mut rng);
        let model = fit_plain(&rows, &labels);
        let json = serde_json::to_string(&model).unwrap();
        let back: DtreeModel = serde_json::from_str(&json).unwrap();
        for row in &rows {
            assert_eq!(model.predict(row), back.predict(row));
            assert_eq!(model.score(row), back.score(row));
        }
    }

    #[test]
    fn max_depth_and_min_split_stop_growth() {
        let rows = vec![
            vec![0.0],
            vec![1.0],
            vec![2.0],
            vec![3.0],
        ];
        let labels = vec![Label::Sz, Label::Hc, Label::Sz, Label::Hc];
        let refs: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
        let stump = DtreeModel::fit(
            &refs,
            &labels,
            &BaselineHyperparams {
                tree_max_depth: Some(1),
                ..BaselineHyperparams::default()
            },
        )
        .unwrap();
        assert_eq!(stump.root.depth(), 1);

        let coarse = DtreeModel::fit(
            &refs,
            &labels,
            &BaselineHyperparams {
                tree_min_split: 5,
                ..BaselineHyperparams::default()
            },
        )
        .unwrap();
        assert_eq!(coarse.root, TreeNode::Leaf { counts: [2, 2] });
        // Tied leaf resolves to SZ.
        assert_eq!(coarse.predict(&[0.5]), Label::Sz);
    }

    #[test]
    fn mixed_duplicate_points_become_a_mixed_leaf() {
        let rows = vec![vec![1.0, 2.0]; 4];
        let labels = vec![Label::Sz, Label::Hc, Label::Hc, Label::Sz];
        let model = fit_plain(&rows, &labels);
        assert_eq!(model.root, TreeNode::Leaf { counts: [2, 2] });
    }
}
