//! Metrics, ROC analysis and the cross-validation harness.
//!
//! SZ is the positive class throughout. Zero-denominator precision/recall
//! are reported as 0 together with an explicit degeneracy flag, so fold
//! aggregation stays total while pathologies remain visible. Aggregate
//! spread is the population standard deviation over the folds.

mod cv;
mod roc;

use serde::{Deserialize, Serialize};

use crate::data::Label;
use crate::error::{Error, Result};

pub use cv::{cross_validate, CvOutcome, FoldEval, FoldMetrics, FoldTask, MetricsReport};
pub use roc::{roc_auc, RocCurve, RocPoint};

/// Two-class confusion counts with SZ as the positive class.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl ConfusionMatrix {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }
}

/// Tallies predictions against ground truth.
pub fn confusion(preds: &[Label], truth: &[Label]) -> Result<ConfusionMatrix> {
    if preds.len() != truth.len() {
        return Err(Error::shape(format!(
            "{} predictions against {} truth labels",
            preds.len(),
            truth.len()
        )));
    }
    let mut cm = ConfusionMatrix::default();
    for (p, t) in preds.iter().zip(truth) {
        match (p, t) {
            (Label::Sz, Label::Sz) => cm.tp += 1,
            (Label::Sz, Label::Hc) => cm.fp += 1,
            (Label::Hc, Label::Hc) => cm.tn += 1,
            (Label::Hc, Label::Sz) => cm.fn_ += 1,
        }
    }
    Ok(cm)
}

/// Accuracy, precision and recall derived from a confusion matrix.
/// `degenerate` names any metric whose denominator was zero.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BasicMetrics {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub degenerate: Vec<String>,
}

/// `acc = (tp+tn)/n`, `prec = tp/(tp+fp)`, `rec = tp/(tp+fn)`.
pub fn metrics(cm: &ConfusionMatrix) -> BasicMetrics {
    let mut degenerate = Vec::new();
    let n = cm.total();
    let accuracy = if n == 0 {
        degenerate.push("accuracy".to_string());
        0.0
    } else {
        (cm.tp + cm.tn) as f64 / n as f64
    };
    let precision = if cm.tp + cm.fp == 0 {
        degenerate.push("precision".to_string());
        0.0
    } else {
        cm.tp as f64 / (cm.tp + cm.fp) as f64
    };
    let recall = if cm.tp + cm.fn_ == 0 {
        degenerate.push("recall".to_string());
        0.0
    } else {
        cm.tp as f64 / (cm.tp + cm.fn_) as f64
    };
    BasicMetrics {
        accuracy,
        precision,
        recall,
        degenerate,
    }
}

/// Mean and population standard deviation of a metric across folds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

/// Population statistics (σ divides by the count, not count − 1), so a
/// constant vector has a standard deviation of exactly 0.
pub fn mean_std(values: &[f64]) -> MeanStd {
    if values.is_empty() {
        return MeanStd { mean: 0.0, std: 0.0 };
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    MeanStd {
        mean,
        std: var.sqrt(),
    }
}

impl MeanStd {
    /// Percentage rendering with two decimals: `(0.9925, 0.0025)` becomes
    /// `"99.25 ± 0.25"`.
    pub fn percent(&self) -> String {
        format!("{:.2} \u{00b1} {:.2}", self.mean * 100.0, self.std * 100.0)
    }
}

/// One rendered row of the methods × metrics comparison table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub method: String,
    pub accuracy: String,
    pub precision: String,
    pub recall: String,
    pub auc: String,
}

/// Builds the comparison table over several finished reports, in the given
/// (stable) method order. Returns an aligned text rendering plus the rows
/// for machine-readable emission.
pub fn aggregate_report(entries: &[(String, &MetricsReport)]) -> Result<(String, Vec<ReportRow>)> {
    if entries.is_empty() {
        return Err(Error::config("no reports to aggregate".to_string()));
    }
    let rows: Vec<ReportRow> = entries
        .iter()
        .map(|(method, report)| ReportRow {
            method: method.clone(),
            accuracy: report.accuracy.percent(),
            precision: report.precision.percent(),
            recall: report.recall.percent(),
            auc: report.auc.percent(),
        })
        .collect();

    let headers = ["Method", "Acc (%)", "Prec (%)", "Rec (%)", "AUC (%)"];
    let mut widths: Vec<usize> = headers.iter().map(|h| h.chars().count()).collect();
    for row in &rows {
        let cells = [
            &row.method,
            &row.accuracy,
            &row.precision,
            &row.recall,
            &row.auc,
        ];
        for (w, cell) in widths.iter_mut().zip(cells) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let mut text = String::new();
    let render = |cells: [&str; 5], text: &mut String| {
        for (i, (cell, w)) in cells.iter().zip(&widths).enumerate() {
            if i > 0 {
                text.push_str("  ");
            }
            text.push_str(cell);
            for _ in cell.chars().count()..*w {
                text.push(' ');
            }
        }
        while text.ends_with(' ') {
            text.pop();
        }
        text.push('\n');
    };
    render(headers, &mut text);
    let rule: String = widths
        .iter()
        .map(|w| "-".repeat(*w))
        .collect::<Vec<_>>()
        .join("--");
    text.push_str(&rule);
    text.push('\n');
    for row in &rows {
        render(
            [
                &row.method,
                &row.accuracy,
                &row.precision,
                &row.recall,
                &row.auc,
            ],
            &mut text,
        );
    }
    Ok((text, rows))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use rand::Rng as _;

    #[test]
    fn perfect_agreement_fills_the_diagonal() {
        let truth = [Label::Sz, Label::Sz, Label::Sz, Label::Hc, Label::Hc];
        let cm = confusion(&truth, &truth).unwrap();
        assert_eq!(
            cm,
            ConfusionMatrix {
                tp: 3,
                fp: 0,
                tn: 2,
                fn_: 0
            }
        );
    }

    #[test]
    fn all_sz_against_all_hc_is_pure_false_positives() {
        let preds = [Label::Sz; 4];
        let truth = [Label::Hc; 4];
        let cm = confusion(&preds, &truth).unwrap();
        assert_eq!(
            cm,
            ConfusionMatrix {
                tp: 0,
                fp: 4,
                tn: 0,
                fn_: 0
            }
        );
        let m = metrics(&cm);
        assert_eq!(m.accuracy, 0.0);
        assert_eq!(m.precision, 0.0);
        assert_eq!(m.recall, 0.0);
        assert!(m.degenerate.contains(&"recall".to_string()));
        assert!(!m.degenerate.contains(&"precision".to_string()));
    }

    #[test]
    fn random_labels_match_an_independent_tally() {
        let mut rng = rng_from_seed(77);
        for _ in 0..1000 {
            let n = rng.gen_range(1..30);
            let draw = |rng: &mut crate::rng::Rng| -> Vec<Label> {
                (0..n)
                    .map(|_| if rng.gen_bool(0.5) { Label::Sz } else { Label::Hc })
                    .collect()
            };
            let preds = draw(&mut rng);
            let truth = draw(&mut rng);
            let cm = confusion(&preds, &truth).unwrap();
            // Oracle: four independent counting loops.
            let count = |p: Label, t: Label| {
                preds
                    .iter()
                    .zip(&truth)
                    .filter(|(a, b)| **a == p && **b == t)
                    .count()
            };
            assert_eq!(cm.tp, count(Label::Sz, Label::Sz));
            assert_eq!(cm.fp, count(Label::Sz, Label::Hc));
            assert_eq!(cm.tn, count(Label::Hc, Label::Hc));
            assert_eq!(cm.fn_, count(Label::Hc, Label::Sz));
            assert_eq!(cm.total(), n);

            let m = metrics(&cm);
            if cm.tp + cm.fp > 0 {
                assert!((m.precision - cm.tp as f64 / (cm.tp + cm.fp) as f64).abs() < 1e-12);
            }
            if cm.tp + cm.fn_ > 0 {
                assert!((m.recall - cm.tp as f64 / (cm.tp + cm.fn_) as f64).abs() < 1e-12);
            }
            assert!((m.accuracy - (cm.tp + cm.tn) as f64 / n as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn formula_example_and_length_mismatch() {
        let cm = ConfusionMatrix {
            tp: 50,
            tn: 49,
            fp: 1,
            fn_: 0,
        };
        let m = metrics(&cm);
        assert!((m.accuracy - 0.99).abs() < 1e-12);
        assert!((m.precision - 50.0 / 51.0).abs() < 1e-12);
        assert_eq!(m.recall, 1.0);
        assert!(m.degenerate.is_empty());

        assert!(confusion(&[Label::Sz], &[Label::Sz, Label::Hc]).is_err());
    }

    #[test]
    fn population_std_of_a_constant_vector_is_zero() {
        let ms = mean_std(&[0.75, 0.75, 0.75, 0.75, 0.75]);
        assert_eq!(ms.mean, 0.75);
        assert_eq!(ms.std, 0.0);
        let ms = mean_std(&[1.0, 0.0]);
        assert!((ms.mean - 0.5).abs() < 1e-15);
        assert!((ms.std - 0.5).abs() < 1e-15);
    }

    #[test]
    fn percent_formatting_matches_the_reporting_convention() {
        let ms = MeanStd {
            mean: 0.9925,
            std: 0.0025,
        };
        assert_eq!(ms.percent(), "99.25 \u{00b1} 0.25");
        let ms = MeanStd {
            mean: 0.8122,
            std: 0.0174,
        };
        assert_eq!(ms.percent(), "81.22 \u{00b1} 1.74");
    }
}
