//! The `report` command: read one or more results.json documents and render
//! a combined comparison table, optionally with a merged JSON + bar chart.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use szbench_core::eval::aggregate_report;
use szbench_core::{Error, Result};

use crate::runner::{Aggregates, ResultsDoc};
use crate::svg::grouped_bars;

/// One run's identity and aggregates inside combined_report.json.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CombinedEntry {
    pub source: String,
    pub method: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub activation: Option<String>,
    pub normalization: String,
    pub k: usize,
    pub seed: u64,
    pub frames: usize,
    pub aggregates: Aggregates,
    pub pooled_auc: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CombinedReport {
    pub format_version: u32,
    pub entries: Vec<CombinedEntry>,
}

fn run_label(doc: &ResultsDoc) -> String {
    let mut label = format!("{} / {}", doc.method, doc.normalization);
    if let Some(act) = &doc.activation {
        label.push(' ');
        label.push_str(act);
    }
    label
}

/// Loads every document, renders the comparison table, and (when `out` is
/// given) writes combined_report.json plus an accuracy/AUC bar chart there.
/// Returns the table text followed by a note per written artifact.
pub fn cmd_report(paths: &[PathBuf], out: Option<&Path>) -> Result<String> {
    if paths.is_empty() {
        return Err(Error::config("report needs at least one results.json".to_string()));
    }
    let docs: Vec<(PathBuf, ResultsDoc)> = paths
        .iter()
        .map(|p| ResultsDoc::load(p).map(|d| (p.clone(), d)))
        .collect::<Result<_>>()?;

    let reports: Vec<_> = docs.iter().map(|(_, d)| d.report()).collect();
    let labeled: Vec<(String, &szbench_core::eval::MetricsReport)> = docs
        .iter()
        .zip(&reports)
        .map(|((_, doc), rep)| (run_label(doc), rep))
        .collect();
    let (table, _rows) = aggregate_report(&labeled)?;

    let mut text = table;
    if let Some(dir) = out {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;

        let combined = CombinedReport {
            format_version: 1,
            entries: docs
                .iter()
                .map(|(path, doc)| CombinedEntry {
                    source: path.display().to_string(),
                    method: doc.method.clone(),
                    activation: doc.activation.clone(),
                    normalization: doc.normalization.to_string(),
                    k: doc.protocol.k,
                    seed: doc.protocol.seed,
                    frames: doc.dataset.frames,
                    aggregates: doc.aggregates.clone(),
                    pooled_auc: doc.pooled_auc,
                })
                .collect(),
        };
        let json_path = dir.join("combined_report.json");
        let mut body = serde_json::to_string_pretty(&combined)
            .map_err(|e| Error::data(format!("combined report serialization: {e}")))?;
        body.push('\n');
        fs::write(&json_path, body).map_err(|e| Error::io(&json_path, e))?;

        let svg_path = dir.join("combined_report.svg");
        let svg = comparison_chart(&docs);
        fs::write(&svg_path, svg).map_err(|e| Error::io(&svg_path, e))?;

        text.push_str(&format!("\nwrote {}\n", json_path.display()));
        text.push_str(&format!("wrote {}\n", svg_path.display()));
    }
    Ok(text)
}

fn comparison_chart(docs: &[(PathBuf, ResultsDoc)]) -> String {
    let categories: Vec<String> = docs.iter().map(|(_, d)| run_label(d)).collect();
    let metric = |f: &dyn Fn(&Aggregates) -> f64| -> Vec<f64> {
        docs.iter().map(|(_, d)| f(&d.aggregates)).collect()
    };
    let series = vec![
        ("accuracy".to_string(), metric(&|a: &Aggregates| a.accuracy.mean)),
        ("precision".to_string(), metric(&|a: &Aggregates| a.precision.mean)),
        ("recall".to_string(), metric(&|a: &Aggregates| a.recall.mean)),
        ("auc".to_string(), metric(&|a: &Aggregates| a.auc.mean)),
    ];
    grouped_bars("Method comparison (fold means)", "metric value", &categories, &series)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ExperimentConfig;
    use crate::runner::{run_experiment, RunFlags};

    fn quick_run(method: &str, dir: &Path) -> PathBuf {
        let cfg: ExperimentConfig = serde_json::from_str(&format!(
            r#"{{
                "dataset": {{ "kind": "synth", "spec": {{
                    "frames_per_class": 12, "frame_samples": 80,
                    "channels": 2, "frames_per_subject": 4, "seed": 2
                }} }},
                "method": "{method}",
                "normalization": "zscore",
                "k": 2
            }}"#
        ))
        .unwrap();
        let flags = RunFlags { out: Some(dir.to_path_buf()), ..Default::default() };
        run_experiment(&cfg, &flags).unwrap();
        dir.join("results.json")
    }

    #[test]
    fn report_combines_runs_and_writes_artifacts() {
        let base = tempfile::tempdir().unwrap();
        let r1 = quick_run("knn", &base.path().join("a"));
        let r2 = quick_run("gnb", &base.path().join("b"));
        let out = base.path().join("combined");

        let text = cmd_report(&[r1, r2], Some(&out)).unwrap();
        assert!(text.contains("knn / zscore"));
        assert!(text.contains("gnb / zscore"));
        assert!(out.join("combined_report.json").is_file());
        assert!(out.join("combined_report.svg").is_file());

        let combined: CombinedReport =
            serde_json::from_str(&fs::read_to_string(out.join("combined_report.json")).unwrap())
                .unwrap();
        assert_eq!(combined.entries.len(), 2);
        assert_eq!(combined.entries[0].method, "knn");
        assert_eq!(combined.entries[1].k, 2);
    }

    #[test]
    fn report_without_out_prints_table_only() {
        let base = tempfile::tempdir().unwrap();
        let r1 = quick_run("cart", &base.path().join("a"));
        let text = cmd_report(&[r1], None).unwrap();
        assert!(text.contains("dtree"), "alias resolves to the canonical label");
        assert!(!text.contains("wrote"));
    }

    #[test]
    fn malformed_results_file_is_a_data_error() {
        let dir = tempfile::tempdir().unwrap();
        let bad = dir.path().join("results.json");
        fs::write(&bad, "{ not json").unwrap();
        let err = cmd_report(&[bad], None).unwrap_err();
        assert!(matches!(err, Error::Data(_)), "got {err}");

        let missing = dir.path().join("absent.json");
        let err = cmd_report(&[missing], None).unwrap_err();
        assert!(matches!(err, Error::Io { .. }), "got {err}");
    }

    #[test]
    fn empty_path_list_is_a_config_error() {
        assert!(matches!(cmd_report(&[], None).unwrap_err(), Error::Config(_)));
    }
}
