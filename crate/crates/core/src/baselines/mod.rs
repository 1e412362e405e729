//! The seven classical classifiers, trained on flattened frames.
//!
//! Every model here is written against the same feature representation: a
//! slice of feature-vector rows (one row per frame, time-major flattening)
//! plus a parallel label slice. Fitting never mutates the training data, and
//! every stochastic choice flows from a seeded generator, so a fit is a pure
//! function of `(data order, hyperparameters, seed)`.

mod ensemble;
mod gnb;
mod knn;
mod svm;
mod tree;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::data::Label;
use crate::error::{Error, Result};

pub use ensemble::EnsembleModel;
pub use gnb::GnbModel;
pub use knn::KnnModel;
pub use svm::SvmModel;
pub use tree::{DtreeModel, TreeNode};

/// The classical methods, in the canonical reporting order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineKind {
    SvmRbf,
    Knn,
    Dtree,
    Gnb,
    Rforest,
    Etrees,
    Bagging,
}

/// Reporting order for tables that cover every classical method.
pub const ALL_BASELINES: [BaselineKind; 7] = [
    BaselineKind::SvmRbf,
    BaselineKind::Knn,
    BaselineKind::Dtree,
    BaselineKind::Gnb,
    BaselineKind::Rforest,
    BaselineKind::Etrees,
    BaselineKind::Bagging,
];

impl fmt::Display for BaselineKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BaselineKind::SvmRbf => "svm_rbf",
            BaselineKind::Knn => "knn",
            BaselineKind::Dtree => "dtree",
            BaselineKind::Gnb => "gnb",
            BaselineKind::Rforest => "rforest",
            BaselineKind::Etrees => "etrees",
            BaselineKind::Bagging => "bagging",
        })
    }
}

impl FromStr for BaselineKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key: String = s
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .collect::<String>()
            .to_ascii_lowercase();
        Ok(match key.as_str() {
            "svmrbf" | "svm" => BaselineKind::SvmRbf,
            "knn" => BaselineKind::Knn,
            "dtree" | "decisiontree" | "dt" | "cart" => BaselineKind::Dtree,
            "gnb" | "naivebayes" | "gaussiannb" => BaselineKind::Gnb,
            "rforest" | "randomforest" | "rf" => BaselineKind::Rforest,
            "etrees" | "extratrees" | "ert" => BaselineKind::Etrees,
            "bagging" => BaselineKind::Bagging,
            _ => return Err(Error::config(format!("unknown baseline method '{s}'"))),
        })
    }
}

/// Pinned "library default" hyperparameters, recorded in every report.
///
/// Defaults: `knn_k = 5`; SVM `C = 1`, RBF with `gamma = scale`
/// (`1/(d·Var)`), KKT tolerance `1e-3`, at most `10_000` optimization
/// passes; trees unbounded depth with `min_split = 2`; every ensemble uses
/// `n_estimators = 100`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BaselineHyperparams {
    pub knn_k: usize,
    pub svm_c: f64,
    pub svm_tol: f64,
    pub svm_max_passes: usize,
    pub tree_min_split: usize,
    pub tree_max_depth: Option<usize>,
    pub n_estimators: usize,
}

impl Default for BaselineHyperparams {
    fn default() -> Self {
        BaselineHyperparams {
            knn_k: 5,
            svm_c: 1.0,
            svm_tol: 1e-3,
            svm_max_passes: 10_000,
            tree_min_split: 2,
            tree_max_depth: None,
            n_estimators: 100,
        }
    }
}

impl BaselineHyperparams {
    pub fn validate(&self) -> Result<()> {
        if self.knn_k == 0 {
            return Err(Error::config("knn_k must be positive".to_string()));
        }
        if !(self.svm_c > 0.0 && self.svm_c.is_finite()) {
            return Err(Error::config("svm_c must be positive and finite".to_string()));
        }
        if !(self.svm_tol > 0.0 && self.svm_tol.is_finite()) {
            return Err(Error::config("svm_tol must be positive and finite".to_string()));
        }
        if self.svm_max_passes == 0 {
            return Err(Error::config("svm_max_passes must be positive".to_string()));
        }
        if self.tree_min_split < 2 {
            return Err(Error::config("tree_min_split must be at least 2".to_string()));
        }
        if self.tree_max_depth == Some(0) {
            return Err(Error::config("tree_max_depth of 0 leaves no tree".to_string()));
        }
        if self.n_estimators == 0 {
            return Err(Error::config("n_estimators must be positive".to_string()));
        }
        Ok(())
    }
}

/// A fitted classical classifier.
///
/// Serializes to JSON (trees as nested nodes, the SVM as support indices
/// plus coefficients and bias); SVM support-vector *contents* are omitted
/// from the JSON form, so it documents a fit rather than reconstructing one.
#[derive(Clone, Debug, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BaselineModel {
    SvmRbf(SvmModel),
    Knn(KnnModel),
    Dtree(DtreeModel),
    Gnb(GnbModel),
    Rforest(EnsembleModel),
    Etrees(EnsembleModel),
    Bagging(EnsembleModel),
}

impl BaselineModel {
    /// Fits `kind` on the given rows. Deterministic in `(rows, hyper, seed)`.
    pub fn fit(
        kind: BaselineKind,
        features: &[&[f64]],
        labels: &[Label],
        hyper: &BaselineHyperparams,
        seed: u64,
    ) -> Result<BaselineModel> {
        hyper.validate()?;
        check_rows(features, labels)?;
        Ok(match kind {
            BaselineKind::SvmRbf => BaselineModel::SvmRbf(SvmModel::fit(
                features, labels, hyper, seed,
            )?),
            BaselineKind::Knn => BaselineModel::Knn(KnnModel::fit(features, labels, hyper)?),
            BaselineKind::Dtree => BaselineModel::Dtree(DtreeModel::fit(features, labels, hyper)?),
            BaselineKind::Gnb => BaselineModel::Gnb(GnbModel::fit(features, labels)?),
            BaselineKind::Rforest => BaselineModel::Rforest(EnsembleModel::fit(
                BaselineKind::Rforest,
                features,
                labels,
                hyper,
                seed,
            )?),
            BaselineKind::Etrees => BaselineModel::Etrees(EnsembleModel::fit(
                BaselineKind::Etrees,
                features,
                labels,
                hyper,
                seed,
            )?),
            BaselineKind::Bagging => BaselineModel::Bagging(EnsembleModel::fit(
                BaselineKind::Bagging,
                features,
                labels,
                hyper,
                seed,
            )?),
        })
    }

    pub fn kind(&self) -> BaselineKind {
        match self {
            BaselineModel::SvmRbf(_) => BaselineKind::SvmRbf,
            BaselineModel::Knn(_) => BaselineKind::Knn,
            BaselineModel::Dtree(_) => BaselineKind::Dtree,
            BaselineModel::Gnb(_) => BaselineKind::Gnb,
            BaselineModel::Rforest(_) => BaselineKind::Rforest,
            BaselineModel::Etrees(_) => BaselineKind::Etrees,
            BaselineModel::Bagging(_) => BaselineKind::Bagging,
        }
    }

    /// Feature dimension the model was fitted on.
    pub fn dim(&self) -> usize {
        match self {
            BaselineModel::SvmRbf(m) => m.dim(),
            BaselineModel::Knn(m) => m.dim(),
            BaselineModel::Dtree(m) => m.dim(),
            BaselineModel::Gnb(m) => m.dim(),
            BaselineModel::Rforest(m) | BaselineModel::Etrees(m) | BaselineModel::Bagging(m) => {
                m.dim()
            }
        }
    }

    /// Predicted label for one feature vector.
    pub fn predict(&self, x: &[f64]) -> Result<Label> {
        self.check_query(x)?;
        Ok(match self {
            BaselineModel::SvmRbf(m) => m.predict(x),
            BaselineModel::Knn(m) => m.predict(x),
            BaselineModel::Dtree(m) => m.predict(x),
            BaselineModel::Gnb(m) => m.predict(x),
            BaselineModel::Rforest(m) | BaselineModel::Etrees(m) | BaselineModel::Bagging(m) => {
                m.predict(x)
            }
        })
    }

    /// Ranking score for ROC analysis; larger means "more SZ".
    ///
    /// KNN reports the SZ fraction among the `k` neighbours, trees and
    /// ensembles a leaf/vote class probability, naive Bayes the posterior,
    /// and the SVM its signed decision value.
    pub fn score(&self, x: &[f64]) -> Result<f64> {
        self.check_query(x)?;
        Ok(match self {
            BaselineModel::SvmRbf(m) => m.decision_value(x),
            BaselineModel::Knn(m) => m.score(x),
            BaselineModel::Dtree(m) => m.score(x),
            BaselineModel::Gnb(m) => m.score(x),
            BaselineModel::Rforest(m) | BaselineModel::Etrees(m) | BaselineModel::Bagging(m) => {
                m.score(x)
            }
        })
    }

    /// Non-fatal condition worth surfacing in reports (e.g. the SVM hitting
    /// its pass budget before reaching the KKT tolerance).
    pub fn warning(&self) -> Option<String> {
        match self {
            BaselineModel::SvmRbf(m) => m.warning(),
            _ => None,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self)
            .map_err(|e| Error::data(format!("baseline serialization: {e}")))
    }

    fn check_query(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::shape(format!(
                "query has {} features, model was fitted on {}",
                x.len(),
                self.dim()
            )));
        }
        Ok(())
    }
}

/// Shared fit preconditions: at least one row, consistent row widths, one
/// label per row.
pub(crate) fn check_rows(features: &[&[f64]], labels: &[Label]) -> Result<usize> {
    if features.is_empty() {
        return Err(Error::data("empty training set".to_string()));
    }
    if features.len() != labels.len() {
        return Err(Error::shape(format!(
            "{} feature rows but {} labels",
            features.len(),
            labels.len()
        )));
    }
    let dim = features[0].len();
    if dim == 0 {
        return Err(Error::shape("feature rows are empty".to_string()));
    }
    for (i, row) in features.iter().enumerate() {
        if row.len() != dim {
            return Err(Error::shape(format!(
                "feature row {i} has {} values, expected {dim}",
                row.len()
            )));
        }
    }
    Ok(dim)
}

/// Euclidean distance squared between two rows of equal length.
pub(crate) fn dist_sq(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (x, y) in a.iter().zip(b) {
        let d = x - y;
        acc += d * d;
    }
    acc
}

/// Dot product of two rows of equal length.
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (x, y) in a.iter().zip(b) {
        acc += x * y;
    }
    acc
}
