//! The `grid` command: execute every run in a grid config (in parallel),
//! keep going past individual failures, and summarize the sweep.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use szbench_core::eval::{aggregate_report, MetricsReport};
use szbench_core::{Error, Result};

use crate::config::{ExperimentConfig, GridConfig, Method};
use crate::runner::{run_experiment, Aggregates, RunFlags, RunOutput};
use crate::svg::grouped_bars;

/// Command-line switches that apply to every run of the sweep.
#[derive(Clone, Debug, Default)]
pub struct GridFlags {
    pub out: Option<PathBuf>,
    pub jobs: Option<usize>,
    pub allow_raw: bool,
    pub subject_split: bool,
    pub reduced: bool,
}

/// One row of grid_results.json.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GridRecord {
    pub index: usize,
    pub method: String,
    pub out: String,
    pub status: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub aggregates: Option<Aggregates>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pooled_auc: Option<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GridResults {
    pub format_version: u32,
    pub runs: Vec<GridRecord>,
}

/// What `grid` hands back to main: the full text to print and whether any
/// run failed (the committed runs still exist on disk either way).
#[derive(Debug)]
pub struct GridOutput {
    pub text: String,
    pub any_failed: bool,
}

/// Directory name for run `i` under a shared `--out` root.
fn run_dir_name(index: usize, cfg: &ExperimentConfig) -> String {
    let slug = cfg
        .method
        .parse::<Method>()
        .map(|m| m.slug())
        .unwrap_or_else(|_| sanitize(&cfg.method));
    format!("run_{index:02}_{slug}")
}

fn sanitize(raw: &str) -> String {
    raw.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() {
                c.to_ascii_lowercase()
            } else {
                '_'
            }
        })
        .collect()
}

/// Resolves each run's output directory up front so collisions abort the
/// sweep before any work starts.
fn resolve_out_dirs(grid: &GridConfig, flags: &GridFlags) -> Result<Vec<PathBuf>> {
    let dirs: Vec<PathBuf> = match &flags.out {
        Some(base) => grid
            .runs
            .iter()
            .enumerate()
            .map(|(i, cfg)| base.join(run_dir_name(i, cfg)))
            .collect(),
        None => grid
            .runs
            .iter()
            .enumerate()
            .map(|(i, cfg)| {
                cfg.out.as_ref().map(PathBuf::from).ok_or_else(|| {
                    Error::config(format!(
                        "grid run {i} has no `out` directory; set one per run or pass --out"
                    ))
                })
            })
            .collect::<Result<_>>()?,
    };
    for (i, dir) in dirs.iter().enumerate() {
        if let Some(j) = dirs[..i].iter().position(|d| d == dir) {
            return Err(Error::config(format!(
                "grid runs {j} and {i} share the output directory {}",
                dir.display()
            )));
        }
    }
    Ok(dirs)
}

/// Loads the grid config and executes the sweep.
pub fn cmd_grid(path: &Path, flags: &GridFlags) -> Result<GridOutput> {
    let grid = GridConfig::load(path)?;
    grid.validate()?;
    let out_dirs = resolve_out_dirs(&grid, flags)?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(flags.jobs.unwrap_or(0))
        .build()
        .map_err(|e| Error::config(format!("cannot build worker pool: {e}")))?;

    let outcomes: Vec<(usize, std::result::Result<RunOutput, Error>)> = pool.install(|| {
        grid.runs
            .par_iter()
            .zip(out_dirs.par_iter())
            .enumerate()
            .map(|(i, (cfg, out_dir))| {
                let run_flags = RunFlags {
                    seed: None,
                    out: Some(out_dir.clone()),
                    allow_raw: flags.allow_raw,
                    subject_split: flags.subject_split,
                    reduced: flags.reduced,
                };
                (i, run_experiment(cfg, &run_flags))
            })
            .collect()
    });

    let mut records = Vec::with_capacity(outcomes.len());
    let mut successes: Vec<(String, MetricsReport)> = Vec::new();
    let mut lines = vec![format!(
        "grid: {} runs ({} workers)",
        grid.runs.len(),
        pool.current_num_threads()
    )];
    for (i, outcome) in &outcomes {
        let cfg = &grid.runs[*i];
        let out_dir = &out_dirs[*i];
        match outcome {
            Ok(output) => {
                let report = output.results.report();
                lines.push(format!(
                    "run {i:02} {}: ok (accuracy {})",
                    output.results.method, output.results.aggregates.accuracy_pct
                ));
                records.push(GridRecord {
                    index: *i,
                    method: output.results.method.clone(),
                    out: out_dir.display().to_string(),
                    status: "ok".to_string(),
                    error: None,
                    aggregates: Some(output.results.aggregates.clone()),
                    pooled_auc: Some(output.results.pooled_auc),
                });
                successes.push((run_label(&output.results), report));
            }
            Err(e) => {
                lines.push(format!("run {i:02} {}: FAILED — {e}", cfg.method));
                records.push(GridRecord {
                    index: *i,
                    method: cfg.method.clone(),
                    out: out_dir.display().to_string(),
                    status: "failed".to_string(),
                    error: Some(e.to_string()),
                    aggregates: None,
                    pooled_auc: None,
                });
            }
        }
    }
    let any_failed = records.iter().any(|r| r.status == "failed");

    let mut text = lines.join("\n");
    text.push('\n');
    if !successes.is_empty() {
        let labeled: Vec<(String, &MetricsReport)> = successes
            .iter()
            .map(|(label, rep)| (label.clone(), rep))
            .collect();
        let (table, _) = aggregate_report(&labeled)?;
        text.push('\n');
        text.push_str(&table);
    }

    if let Some(base) = &flags.out {
        fs::create_dir_all(base).map_err(|e| Error::io(base, e))?;
        let json_path = base.join("grid_results.json");
        let mut body = serde_json::to_string_pretty(&GridResults {
            format_version: 1,
            runs: records,
        })
        .map_err(|e| Error::data(format!("grid results serialization: {e}")))?;
        body.push('\n');
        fs::write(&json_path, body).map_err(|e| Error::io(&json_path, e))?;
        text.push_str(&format!("\nwrote {}\n", json_path.display()));

        if !successes.is_empty() {
            let svg_path = base.join("grid_results.svg");
            fs::write(&svg_path, sweep_chart(&outcomes))
                .map_err(|e| Error::io(&svg_path, e))?;
            text.push_str(&format!("wrote {}\n", svg_path.display()));
        }
    }

    Ok(GridOutput { text, any_failed })
}

fn run_label(results: &crate::runner::ResultsDoc) -> String {
    let mut label = format!("{} / {}", results.method, results.normalization);
    if let Some(act) = &results.activation {
        label.push(' ');
        label.push_str(act);
    }
    label
}

/// Accuracy-vs-AUC chart across the successful runs, in run order.
fn sweep_chart(outcomes: &[(usize, std::result::Result<RunOutput, Error>)]) -> String {
    let ok: Vec<(usize, &RunOutput)> = outcomes
        .iter()
        .filter_map(|(i, r)| r.as_ref().ok().map(|o| (*i, o)))
        .collect();
    let categories: Vec<String> = ok
        .iter()
        .map(|(i, o)| format!("{i:02} {}", o.results.method))
        .collect();
    let series = vec![
        (
            "accuracy".to_string(),
            ok.iter()
                .map(|(_, o)| o.results.aggregates.accuracy.mean)
                .collect::<Vec<f64>>(),
        ),
        (
            "auc".to_string(),
            ok.iter()
                .map(|(_, o)| o.results.aggregates.auc.mean)
                .collect::<Vec<f64>>(),
        ),
    ];
    grouped_bars("Grid sweep (fold means)", "metric value", &categories, &series)
}
