//! Fold orchestration: train on k−1 folds, evaluate on the held-out fold,
//! aggregate mean ± population-std metrics.

use serde::{Deserialize, Serialize};

use crate::data::{Frame, FrameSet, FoldSplit, Label};
use crate::error::{Error, Result};
use crate::models::EpochStats;

use super::{confusion, mean_std, metrics, roc_auc, ConfusionMatrix, MeanStd, RocCurve};

/// One fold's training/evaluation assignment handed to the method runner.
pub struct FoldTask<'a> {
    pub fold: usize,
    pub train_frames: Vec<&'a Frame>,
    pub test_frames: Vec<&'a Frame>,
    pub train_indices: Vec<usize>,
    pub test_indices: Vec<usize>,
}

/// What a method runner reports back for one fold: an SZ-ranking score and
/// a hard label per test frame (in `test_frames` order), plus an optional
/// learning curve and any warnings worth surfacing.
pub struct FoldEval {
    pub scores: Vec<f64>,
    pub preds: Vec<Label>,
    pub learning_curve: Vec<EpochStats>,
    pub warnings: Vec<String>,
}

/// Metrics of a single fold.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FoldMetrics {
    pub fold: usize,
    pub test_frames: usize,
    pub confusion: ConfusionMatrix,
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub auc: f64,
    /// Metrics whose denominator collapsed ("precision", "recall", or
    /// "auc" when the held-out fold contains one class only).
    pub degenerate: Vec<String>,
}

/// Per-fold metrics plus their aggregates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub folds: Vec<FoldMetrics>,
    pub accuracy: MeanStd,
    pub precision: MeanStd,
    pub recall: MeanStd,
    pub auc: MeanStd,
}

/// Everything cross-validation produces beyond the metric table: the ROC
/// over the pooled held-out scores and the per-fold learning curves.
#[derive(Debug)]
pub struct CvOutcome {
    pub report: MetricsReport,
    pub pooled_roc: RocCurve,
    pub pooled_auc: f64,
    pub fold_curves: Vec<Vec<EpochStats>>,
    pub warnings: Vec<String>,
}

/// Runs `run_fold` once per fold and assembles the report.
///
/// Preconditions checked here: the split covers the frame set exactly, every
/// fold's training partition contains both classes, and the runner returns
/// one score and one prediction per held-out frame. Folds run sequentially
/// in fold order, so any seeded work inside the runner is reproducible.
pub fn cross_validate<F>(set: &FrameSet, split: &FoldSplit, mut run_fold: F) -> Result<CvOutcome>
where
    F: FnMut(&FoldTask) -> Result<FoldEval>,
{
    set.validate()?;
    if split.assignments.len() != set.len() {
        return Err(Error::shape(format!(
            "fold split covers {} frames, set has {}",
            split.assignments.len(),
            set.len()
        )));
    }
    if split.k < 2 {
        return Err(Error::config("cross-validation needs k >= 2".to_string()));
    }
    if let Some(bad) = split.assignments.iter().find(|&&a| a >= split.k) {
        return Err(Error::data(format!(
            "fold assignment {bad} out of range for k = {}",
            split.k
        )));
    }

    let mut folds = Vec::with_capacity(split.k);
    let mut fold_curves = Vec::with_capacity(split.k);
    let mut warnings = Vec::new();
    let mut pooled_scores = Vec::with_capacity(set.len());
    let mut pooled_truth = Vec::with_capacity(set.len());

    for fold in 0..split.k {
        let train_indices = split.train_indices(fold);
        let test_indices = split.test_indices(fold);
        if test_indices.is_empty() {
            return Err(Error::data(format!("fold {fold} has no held-out frames")));
        }
        let mut train_classes = [0usize; 2];
        for &i in &train_indices {
            train_classes[set.frames[i].label.index()] += 1;
        }
        if train_classes[0] == 0 || train_classes[1] == 0 {
            return Err(Error::data(format!(
                "fold {fold}: training partition lacks a class \
                 (sz = {}, hc = {})",
                train_classes[0], train_classes[1]
            )));
        }

        let task = FoldTask {
            fold,
            train_frames: train_indices.iter().map(|&i| &set.frames[i]).collect(),
            test_frames: test_indices.iter().map(|&i| &set.frames[i]).collect(),
            train_indices,
            test_indices,
        };
        let eval = run_fold(&task)?;
        if eval.scores.len() != task.test_frames.len() || eval.preds.len() != task.test_frames.len()
        {
            return Err(Error::shape(format!(
                "fold {fold}: runner returned {} scores / {} predictions for {} test frames",
                eval.scores.len(),
                eval.preds.len(),
                task.test_frames.len()
            )));
        }

        let truth: Vec<Label> = task.test_frames.iter().map(|f| f.label).collect();
        let cm = confusion(&eval.preds, &truth)?;
        let basic = metrics(&cm);
        let mut degenerate = basic.degenerate;
        let auc = match roc_auc(&eval.scores, &truth) {
            Ok((_, auc)) => auc,
            Err(_) => {
                degenerate.push("auc".to_string());
                0.0
            }
        };
        pooled_scores.extend_from_slice(&eval.scores);
        pooled_truth.extend_from_slice(&truth);
        for w in eval.warnings {
            warnings.push(format!("fold {fold}: {w}"));
        }
        fold_curves.push(eval.learning_curve);
        folds.push(FoldMetrics {
            fold,
            test_frames: truth.len(),
            confusion: cm,
            accuracy: basic.accuracy,
            precision: basic.precision,
            recall: basic.recall,
            auc,
            degenerate,
        });
    }

    let collect = |f: &dyn Fn(&FoldMetrics) -> f64| -> Vec<f64> { folds.iter().map(f).collect() };
    let report = MetricsReport {
        accuracy: mean_std(&collect(&|m| m.accuracy)),
        precision: mean_std(&collect(&|m| m.precision)),
        recall: mean_std(&collect(&|m| m.recall)),
        auc: mean_std(&collect(&|m| m.auc)),
        folds,
    };
    let (pooled_roc, pooled_auc) = roc_auc(&pooled_scores, &pooled_truth)?;
    Ok(CvOutcome {
        report,
        pooled_roc,
        pooled_auc,
        fold_curves,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{split_kfold, Normalization};
    use crate::tensor::Tensor;

    fn toy_set(n_per_class: usize) -> FrameSet {
        let mut frames = Vec::new();
        for i in 0..2 * n_per_class {
            let label = if i % 2 == 0 { Label::Sz } else { Label::Hc };
            let v = if label == Label::Sz { 1.0 } else { -1.0 };
            frames.push(Frame {
                subject_id: format!("s{i}"),
                label,
                frame_index: 0,
                normalization: Normalization::Raw,
                data: Tensor::filled(&[4, 2], v),
            });
        }
        FrameSet {
            sample_rate_hz: 250.0,
            channel_names: vec!["a".to_string(), "b".to_string()],
            frames,
        }
    }

    fn oracle_eval(task: &FoldTask) -> Result<FoldEval> {
        let preds: Vec<Label> = task.test_frames.iter().map(|f| f.label).collect();
        let scores: Vec<f64> = preds
            .iter()
            .map(|l| if *l == Label::Sz { 0.9 } else { 0.1 })
            .collect();
        Ok(FoldEval {
            scores,
            preds,
            learning_curve: Vec::new(),
            warnings: Vec::new(),
        })
    }

    #[test]
    fn perfect_classifier_gets_ones_with_zero_spread() {
        let set = toy_set(10);
        let split = split_kfold(&set, 5, 3).unwrap();
        let outcome = cross_validate(&set, &split, oracle_eval).unwrap();
        let r = &outcome.report;
        assert_eq!(r.folds.len(), 5);
        assert_eq!((r.accuracy.mean, r.accuracy.std), (1.0, 0.0));
        assert_eq!((r.precision.mean, r.precision.std), (1.0, 0.0));
        assert_eq!((r.recall.mean, r.recall.std), (1.0, 0.0));
        assert_eq!((r.auc.mean, r.auc.std), (1.0, 0.0));
        assert_eq!(outcome.pooled_auc, 1.0);
        assert!(outcome.warnings.is_empty());
    }

    #[test]
    fn constant_sz_classifier_scores_the_base_rate() {
        let set = toy_set(10);
        let split = split_kfold(&set, 5, 3).unwrap();
        let outcome = cross_validate(&set, &split, |task: &FoldTask| {
            Ok(FoldEval {
                scores: vec![0.5; task.test_frames.len()],
                preds: vec![Label::Sz; task.test_frames.len()],
                learning_curve: Vec::new(),
                warnings: vec!["constant output".to_string()],
            })
        })
        .unwrap();
        let r = &outcome.report;
        assert!((r.accuracy.mean - 0.5).abs() < 1e-12);
        assert_eq!(r.recall.mean, 1.0);
        assert!((r.precision.mean - 0.5).abs() < 1e-12);
        // All-tied scores give the chance diagonal.
        assert!((r.auc.mean - 0.5).abs() < 1e-12);
        assert!((outcome.pooled_auc - 0.5).abs() < 1e-12);
        assert_eq!(outcome.warnings.len(), 5);
        assert!(outcome.warnings[0].starts_with("fold 0:"));
    }

    #[test]
    fn fold_union_covers_the_set_exactly() {
        let set = toy_set(13); // deliberately not divisible by k
        let split = split_kfold(&set, 5, 11).unwrap();
        let mut seen = vec![0usize; set.len()];
        for fold in 0..split.k {
            for i in split.test_indices(fold) {
                seen[i] += 1;
            }
            let train = split.train_indices(fold);
            let test = split.test_indices(fold);
            assert_eq!(train.len() + test.len(), set.len());
        }
        assert!(seen.iter().all(|&c| c == 1));
    }

    #[test]
    fn single_class_training_partition_is_an_error() {
        let set = toy_set(2); // 4 frames: SZ at 0, 2; HC at 1, 3
        let split = FoldSplit {
            k: 2,
            seed: 0,
            // Fold 1's training partition (= fold 0) is all-SZ.
            assignments: vec![0, 1, 0, 1],
        };
        let err = cross_validate(&set, &split, oracle_eval).unwrap_err();
        assert!(err.to_string().contains("lacks a class"), "{err}");
    }

    #[test]
    fn runner_output_lengths_are_checked() {
        let set = toy_set(5);
        let split = split_kfold(&set, 5, 0).unwrap();
        let err = cross_validate(&set, &split, |task: &FoldTask| {
            Ok(FoldEval {
                scores: vec![0.5; task.test_frames.len() + 1],
                preds: vec![Label::Sz; task.test_frames.len()],
                learning_curve: Vec::new(),
                warnings: Vec::new(),
            })
        })
        .unwrap_err();
        assert!(err.to_string().contains("runner returned"), "{err}");
    }

    #[test]
    fn mismatched_split_and_bad_assignments_are_rejected() {
        let set = toy_set(5);
        let short = FoldSplit {
            k: 2,
            seed: 0,
            assignments: vec![0, 1],
        };
        assert!(cross_validate(&set, &short, oracle_eval).is_err());
        let out_of_range = FoldSplit {
            k: 2,
            seed: 0,
            assignments: vec![0, 1, 2, 0, 1, 0, 1, 0, 1, 0],
        };
        assert!(cross_validate(&set, &out_of_range, oracle_eval).is_err());
    }

    #[test]
    fn aggregate_report_renders_rows_in_declared_order() {
        let set = toy_set(6);
        let split = split_kfold(&set, 3, 1).unwrap();
        let outcome = cross_validate(&set, &split, oracle_eval).unwrap();
        let entries = vec![
            ("CNN-1".to_string(), &outcome.report),
            ("bagging".to_string(), &outcome.report),
        ];
        let (text, rows) = super::super::aggregate_report(&entries).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].method, "CNN-1");
        assert_eq!(rows[1].method, "bagging");
        assert_eq!(rows[0].accuracy, "100.00 \u{00b1} 0.00");
        let lines: Vec<&str> = text.lines().collect();
        assert!(lines[0].starts_with("Method"));
        assert!(lines[2].starts_with("CNN-1"));
        assert!(lines[3].starts_with("bagging"));
        assert!(super::super::aggregate_report(&[]).is_err());
    }
}
