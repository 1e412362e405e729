//! The `run` command: resolve the dataset, normalize, cross-validate the
//! configured method, and write every artifact (results.json, ROC and
//! learning-curve CSVs, SVG plots) into the output directory.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use szbench_core::baselines::{BaselineHyperparams, BaselineModel};
use szbench_core::data::{
    normalize, read_cache, split_kfold, split_kfold_by_subject, synthetic_frames, FoldSplit,
    FrameSet, Label, Normalization,
};
use szbench_core::eval::{
    aggregate_report, cross_validate, CvOutcome, FoldEval, FoldMetrics, FoldTask, MeanStd,
    MetricsReport, RocCurve,
};
use szbench_core::models::{
    build, save_checkpoint, train, EpochStats, ModelName, TrainConfig, DEFAULT_L2_COEFF,
};
use szbench_core::nn::Activation;
use szbench_core::rng::derive_seed;
use szbench_core::tensor::Tensor;
use szbench_core::{Error, Result};

use crate::config::{DatasetSource, ExperimentConfig, Method};
use crate::ingest::{count_subjects, load_manifest_frames};
use crate::svg::{line_plot, Series};

/// Classification threshold for scalar sigmoid heads.
const THRESHOLD: f64 = 0.5;
/// Thinning step applied by `--reduced`.
const REDUCED_STEP: usize = 5;
/// At most this many zero-variance channel reports are itemized per run.
const MAX_NORM_WARNINGS: usize = 8;

/// Command-line switches that modify a configured run.
#[derive(Clone, Debug, Default)]
pub struct RunFlags {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub allow_raw: bool,
    pub subject_split: bool,
    pub reduced: bool,
}

/// Everything `run` produced: the parsed document, rendered table, and the
/// stdout narration (dataset summary, cache status, artifact list).
#[derive(Debug)]
pub struct RunOutput {
    pub out_dir: PathBuf,
    pub results: ResultsDoc,
    pub table: String,
    pub summary_lines: Vec<String>,
}

/// Dataset identity recorded in results.json. Cache hit/miss status is
/// deliberately excluded: it varies between identical runs and would break
/// byte-reproducibility of the document.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub kind: String,
    pub source: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_hash: Option<String>,
    pub subjects: [usize; 2],
    pub frames: usize,
    pub class_counts: [usize; 2],
    pub frame_samples: usize,
    pub channels: usize,
    pub sample_rate_hz: f64,
    pub reduced: bool,
}

/// The evaluation protocol, pinned so a reader can re-run bit-identically.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Protocol {
    pub k: usize,
    pub seed: u64,
    pub subject_split: bool,
    pub threshold: f64,
    pub positive_class: String,
    pub std_convention: String,
    pub roc_pooling: String,
    pub fold_seeds: Vec<u64>,
    pub fold_assignments: Vec<usize>,
}

/// Resolved training hyperparameters for deep runs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainingManifest {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub optimizer: szbench_core::optim::OptimizerKind,
    pub validation_fraction: f64,
    pub l2_coeff: f64,
    pub activation: String,
    pub init_scheme: String,
    pub loss: String,
}

/// Metric aggregates in both fractional and table ("99.25 ± 0.25") forms.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aggregates {
    pub accuracy: MeanStd,
    pub precision: MeanStd,
    pub recall: MeanStd,
    pub auc: MeanStd,
    pub accuracy_pct: String,
    pub precision_pct: String,
    pub recall_pct: String,
    pub auc_pct: String,
}

/// The machine-readable experiment record written to results.json.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ResultsDoc {
    pub format_version: u32,
    pub method: String,
    pub family: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub activation: Option<String>,
    pub normalization: Normalization,
    pub dataset: DatasetSummary,
    pub protocol: Protocol,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub training: Option<TrainingManifest>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub baseline_hyperparams: Option<BaselineHyperparams>,
    /// The configuration this run used (seed reflects any command-line
    /// override; the output location is omitted so documents are location-
    /// independent), sufficient to reproduce the run bit for bit.
    pub config: ExperimentConfig,
    pub folds: Vec<FoldMetrics>,
    pub aggregates: Aggregates,
    pub pooled_auc: f64,
    pub pooled_roc: RocCurve,
    /// Per-fold epoch curves; empty for classical methods.
    pub learning_curves: Vec<Vec<EpochStats>>,
    pub warnings: Vec<String>,
}

impl ResultsDoc {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text)
            .map_err(|e| Error::data(format!("{}: not a results document: {e}", path.display())))
    }

    /// Rebuilds the per-method report for table rendering.
    pub fn report(&self) -> MetricsReport {
        MetricsReport {
            folds: self.folds.clone(),
            accuracy: self.aggregates.accuracy,
            precision: self.aggregates.precision,
            recall: self.aggregates.recall,
            auc: self.aggregates.auc,
        }
    }
}

struct LoadedFrames {
    set: FrameSet,
    summary: DatasetSummary,
    /// Stdout-only notes (cache reuse, channel oddities).
    notes: Vec<String>,
}

fn load_frames(source: &DatasetSource) -> Result<LoadedFrames> {
    match source {
        DatasetSource::Synth { spec } => {
            let set = synthetic_frames(spec)?;
            let summary = DatasetSummary {
                kind: "synth".to_string(),
                source: format!("synthetic (seed {})", spec.seed),
                source_hash: None,
                subjects: count_subjects(&set),
                frames: set.len(),
                class_counts: set.class_counts(),
                frame_samples: spec.frame_samples,
                channels: spec.channels,
                sample_rate_hz: spec.sample_rate_hz,
                reduced: false,
            };
            Ok(LoadedFrames { set, summary, notes: vec![] })
        }
        DatasetSource::Cache { path } => {
            let path = Path::new(path);
            let (set, info) = read_cache(path)?;
            let (t, c) = set.frames[0].data.dims2()?;
            let summary = DatasetSummary {
                kind: "cache".to_string(),
                source: path.display().to_string(),
                source_hash: Some(info.source_hash),
                subjects: count_subjects(&set),
                frames: set.len(),
                class_counts: set.class_counts(),
                frame_samples: t,
                channels: c,
                sample_rate_hz: set.sample_rate_hz,
                reduced: false,
            };
            Ok(LoadedFrames { set, summary, notes: vec![] })
        }
        DatasetSource::Recordings {
            manifest,
            data_dir,
            frame_samples,
            csv_sample_rate_hz,
        } => {
            let manifest_path = Path::new(manifest);
            let sidecar = manifest_path.with_extension("szbf");
            let loaded = load_manifest_frames(
                manifest_path,
                data_dir.as_ref().map(Path::new),
                *frame_samples,
                *csv_sample_rate_hz,
            )?;
            let mut notes: Vec<String> = loaded
                .warnings
                .iter()
                .map(|w| format!("warning: {w}"))
                .collect();

            // Reuse the sidecar cache when it matches the current inputs;
            // refresh it otherwise. The hash above is computed from the raw
            // files, so a stale cache can never win.
            let set = match read_cache(&sidecar) {
                Ok((cached, info)) if info.source_hash == loaded.source_hash => {
                    notes.push(format!("frame cache: reused {}", sidecar.display()));
                    cached
                }
                _ => {
                    match szbench_core::data::write_cache(
                        &sidecar,
                        &loaded.set,
                        &szbench_core::data::CacheInfo {
                            source_hash: loaded.source_hash.clone(),
                        },
                    ) {
                        Ok(()) => notes.push(format!("frame cache: wrote {}", sidecar.display())),
                        Err(e) => notes.push(format!("frame cache: not written ({e})")),
                    }
                    loaded.set
                }
            };

            let (t, c) = set.frames[0].data.dims2()?;
            let summary = DatasetSummary {
                kind: "recordings".to_string(),
                source: manifest_path.display().to_string(),
                source_hash: Some(loaded.source_hash),
                subjects: loaded.subjects,
                frames: set.len(),
                class_counts: set.class_counts(),
                frame_samples: t,
                channels: c,
                sample_rate_hz: set.sample_rate_hz,
                reduced: false,
            };
            Ok(LoadedFrames { set, summary, notes })
        }
    }
}

/// Normalizes raw frames to `requested`, passing through sets that already
/// carry the right tag and refusing to re-normalize anything else.
fn apply_normalization(
    set: FrameSet,
    requested: Normalization,
    warnings: &mut Vec<String>,
) -> Result<FrameSet> {
    let current = set.frames[0].normalization;
    if current == requested {
        return Ok(set);
    }
    if current != Normalization::Raw {
        return Err(Error::config(format!(
            "dataset frames are already normalized as {current}; cannot produce {requested} \
             (re-ingest the raw data instead)"
        )));
    }
    let mut frames = Vec::with_capacity(set.frames.len());
    let mut zero_var = Vec::new();
    for frame in &set.frames {
        let result = normalize(frame, requested)?;
        if !result.zero_variance_channels.is_empty() && zero_var.len() < MAX_NORM_WARNINGS {
            zero_var.push(format!(
                "{} frame {}: constant channels {:?} zeroed",
                frame.subject_id, frame.frame_index, result.zero_variance_channels
            ));
        }
        frames.push(result.frame);
    }
    warnings.extend(zero_var);
    Ok(FrameSet { frames, ..set })
}

fn fold_split(set: &FrameSet, k: usize, seed: u64, by_subject: bool) -> Result<FoldSplit> {
    if by_subject {
        split_kfold_by_subject(set, k, seed)
    } else {
        split_kfold(set, k, seed)
    }
}

/// Runs one configured experiment end to end and writes all artifacts.
pub fn run_experiment(cfg: &ExperimentConfig, flags: &RunFlags) -> Result<RunOutput> {
    cfg.validate()?;
    let method: Method = cfg.method.parse()?;
    let seed = flags.seed.unwrap_or(cfg.seed);
    let out_dir = flags
        .out
        .clone()
        .or_else(|| cfg.out.as_ref().map(PathBuf::from))
        .ok_or_else(|| {
            Error::config("no output directory (set `out` in the config or pass --out)".to_string())
        })?;

    let activation = match (&method, &cfg.activation) {
        (Method::Deep(_), Some(text)) => Some(text.parse::<Activation>()?),
        (Method::Deep(_), None) => Some(Activation::Relu),
        (Method::Baseline(_), _) => None,
    };
    let mut warnings = Vec::new();
    if !method.is_deep() && cfg.activation.is_some() {
        warnings.push(format!(
            "activation '{}' is ignored for classical method {}",
            cfg.activation.as_deref().unwrap_or_default(),
            method
        ));
    }
    if cfg.normalization == Normalization::Raw && method.is_deep() && !flags.allow_raw {
        return Err(Error::config(format!(
            "deep model {method} on raw (unnormalized) frames is almost certainly a mistake; \
             pass --allow-raw to proceed"
        )));
    }

    let loaded = load_frames(&cfg.dataset)?;
    let mut set = loaded.set;
    let mut summary = loaded.summary;
    let notes = loaded.notes;
    if flags.reduced {
        set = set.thin(REDUCED_STEP)?;
        summary.reduced = true;
        summary.frames = set.len();
        summary.class_counts = set.class_counts();
        summary.subjects = count_subjects(&set);
    }
    let set = apply_normalization(set, cfg.normalization, &mut warnings)?;

    let split = fold_split(&set, cfg.k, seed, flags.subject_split)?;
    let fold_seeds: Vec<u64> = (0..cfg.k)
        .map(|f| derive_seed(seed, "fold", f as u64))
        .collect();

    fs::create_dir_all(&out_dir).map_err(|e| Error::io(&out_dir, e))?;

    let outcome = match method {
        Method::Deep(name) => run_deep_folds(
            name,
            activation.unwrap_or(Activation::Relu),
            cfg,
            &set,
            &split,
            &fold_seeds,
            &out_dir,
        )?,
        Method::Baseline(kind) => run_baseline_folds(
            kind,
            &cfg.baseline,
            cfg.save_fold_models,
            &set,
            &split,
            &fold_seeds,
            &out_dir,
        )?,
    };
    warnings.extend(outcome.warnings.iter().cloned());

    let (table, _rows) = aggregate_report(&[(method.label(), &outcome.report)])?;

    // The config echo reflects the effective seed but omits the output
    // location, so the same experiment produces byte-identical documents
    // no matter where it is written.
    let mut effective_cfg = cfg.clone();
    effective_cfg.seed = seed;
    effective_cfg.out = None;

    let results = ResultsDoc {
        format_version: 1,
        method: method.label(),
        family: if method.is_deep() { "deep" } else { "classical" }.to_string(),
        activation: activation.map(|a| a.to_string()),
        normalization: cfg.normalization,
        dataset: summary,
        protocol: Protocol {
            k: cfg.k,
            seed,
            subject_split: flags.subject_split,
            threshold: THRESHOLD,
            positive_class: Label::Sz.as_str().to_string(),
            std_convention: "population".to_string(),
            roc_pooling: "held-out scores pooled across folds".to_string(),
            fold_seeds,
            fold_assignments: split.assignments.clone(),
        },
        training: match method {
            Method::Deep(name) => {
                let tc = cfg.train.resolve(name, 0);
                Some(TrainingManifest {
                    epochs: tc.epochs,
                    batch_size: tc.batch_size,
                    learning_rate: tc.learning_rate,
                    optimizer: tc.optimizer,
                    validation_fraction: tc.validation_fraction,
                    l2_coeff: cfg.train.l2.unwrap_or(DEFAULT_L2_COEFF),
                    activation: activation.unwrap_or(Activation::Relu).to_string(),
                    init_scheme: "glorot-uniform weights; lstm recurrent uniform \
                                  1/sqrt(units); zero biases except lstm forget gate = 1"
                        .to_string(),
                    loss: "mean binary cross-entropy + l2 * sum of squared weights".to_string(),
                })
            }
            Method::Baseline(_) => None,
        },
        baseline_hyperparams: match method {
            Method::Baseline(_) => Some(cfg.baseline.clone()),
            Method::Deep(_) => None,
        },
        config: effective_cfg,
        folds: outcome.report.folds.clone(),
        aggregates: Aggregates {
            accuracy: outcome.report.accuracy,
            precision: outcome.report.precision,
            recall: outcome.report.recall,
            auc: outcome.report.auc,
            accuracy_pct: outcome.report.accuracy.percent(),
            precision_pct: outcome.report.precision.percent(),
            recall_pct: outcome.report.recall.percent(),
            auc_pct: outcome.report.auc.percent(),
        },
        pooled_auc: outcome.pooled_auc,
        pooled_roc: outcome.pooled_roc.clone(),
        learning_curves: outcome.fold_curves.clone(),
        warnings: warnings.clone(),
    };

    let artifacts = write_artifacts(&out_dir, &method, &results)?;

    let mut summary_lines = notes;
    summary_lines.push(format!(
        "dataset: {} frames ({} SZ / {} HC, {} subjects), {}x{} @ {} Hz [{}{}]",
        results.dataset.frames,
        results.dataset.class_counts[0],
        results.dataset.class_counts[1],
        results.dataset.subjects[0] + results.dataset.subjects[1],
        results.dataset.frame_samples,
        results.dataset.channels,
        results.dataset.sample_rate_hz,
        results.dataset.kind,
        if results.dataset.reduced { ", reduced" } else { "" },
    ));
    summary_lines.push(format!(
        "protocol: {} {}-fold, seed {}, normalization {}{}",
        if flags.subject_split { "subject-stratified" } else { "frame-stratified" },
        cfg.k,
        seed,
        cfg.normalization,
        activation.map(|a| format!(", activation {a}")).unwrap_or_default(),
    ));
    for w in &warnings {
        summary_lines.push(format!("warning: {w}"));
    }
    summary_lines.push(format!("pooled AUC: {:.4}", results.pooled_auc));
    summary_lines.push(format!(
        "wrote {} -> {}",
        artifacts.join(", "),
        out_dir.display()
    ));

    Ok(RunOutput { out_dir, results, table, summary_lines })
}

fn run_deep_folds(
    name: ModelName,
    activation: Activation,
    cfg: &ExperimentConfig,
    set: &FrameSet,
    split: &FoldSplit,
    fold_seeds: &[u64],
    out_dir: &Path,
) -> Result<CvOutcome> {
    let mut spec = build(name, activation);
    if let Some(l2) = cfg.train.l2 {
        spec.l2_coeff = l2;
    }
    cross_validate(set, split, |task: &FoldTask| -> Result<FoldEval> {
        let train_pairs: Vec<(&Tensor, Label)> = task
            .train_frames
            .iter()
            .map(|f| (&f.data, f.label))
            .collect();
        let tc: TrainConfig = cfg.train.resolve(name, fold_seeds[task.fold]);
        let model = train(&spec, &train_pairs, &tc)?;
        let test: Vec<&Tensor> = task.test_frames.iter().map(|f| &f.data).collect();
        let preds = model.predict(&test, THRESHOLD)?;
        if cfg.save_fold_models {
            let path = out_dir.join(format!("fold_{}.szcp", task.fold));
            save_checkpoint(&path, &model, cfg.normalization)?;
        }
        Ok(FoldEval {
            scores: preds.iter().map(|p| p.score).collect(),
            preds: preds.iter().map(|p| p.label).collect(),
            learning_curve: model.learning_curve.clone(),
            warnings: vec![],
        })
    })
}

fn run_baseline_folds(
    kind: szbench_core::baselines::BaselineKind,
    hyper: &BaselineHyperparams,
    save_fold_models: bool,
    set: &FrameSet,
    split: &FoldSplit,
    fold_seeds: &[u64],
    out_dir: &Path,
) -> Result<CvOutcome> {
    cross_validate(set, split, |task: &FoldTask| -> Result<FoldEval> {
        // A frame's feature vector is its row-major sample data, so the
        // tensor's backing slice serves directly as the flattened features.
        let features: Vec<&[f64]> = task.train_frames.iter().map(|f| f.data.data()).collect();
        let labels: Vec<Label> = task.train_frames.iter().map(|f| f.label).collect();
        let model = BaselineModel::fit(kind, &features, &labels, hyper, fold_seeds[task.fold])?;
        let mut scores = Vec::with_capacity(task.test_frames.len());
        let mut preds = Vec::with_capacity(task.test_frames.len());
        for frame in &task.test_frames {
            scores.push(model.score(frame.data.data())?);
            preds.push(model.predict(frame.data.data())?);
        }
        if save_fold_models {
            let path = out_dir.join(format!("fold_{}_model.json", task.fold));
            fs::write(&path, model.to_json()?).map_err(|e| Error::io(&path, e))?;
        }
        Ok(FoldEval {
            scores,
            preds,
            learning_curve: vec![],
            warnings: model.warning().into_iter().collect(),
        })
    })
}

/// Mean of per-fold learning curves, epoch by epoch. Validation columns are
/// `None` when the folds trained without a validation split.
fn averaged_curve(curves: &[Vec<EpochStats>]) -> Vec<EpochStats> {
    let Some(first) = curves.iter().find(|c| !c.is_empty()) else {
        return vec![];
    };
    let epochs = first.len();
    let mut out = Vec::with_capacity(epochs);
    for e in 0..epochs {
        let rows: Vec<&EpochStats> = curves.iter().filter_map(|c| c.get(e)).collect();
        let n = rows.len() as f64;
        let mean = |f: &dyn Fn(&EpochStats) -> f64| rows.iter().map(|r| f(r)).sum::<f64>() / n;
        let opt_mean = |f: &dyn Fn(&EpochStats) -> Option<f64>| {
            let vals: Vec<f64> = rows.iter().filter_map(|r| f(r)).collect();
            if vals.len() == rows.len() && !vals.is_empty() {
                Some(vals.iter().sum::<f64>() / vals.len() as f64)
            } else {
                None
            }
        };
        out.push(EpochStats {
            epoch: e,
            train_loss: mean(&|r: &EpochStats| r.train_loss),
            train_accuracy: mean(&|r: &EpochStats| r.train_accuracy),
            val_loss: opt_mean(&|r: &EpochStats| r.val_loss),
            val_accuracy: opt_mean(&|r: &EpochStats| r.val_accuracy),
        });
    }
    out
}

/// Writes results.json, the ROC CSV/SVG, and (for deep methods) the
/// learning-curve CSV/SVG. Returns the artifact file names.
fn write_artifacts(out_dir: &Path, method: &Method, results: &ResultsDoc) -> Result<Vec<String>> {
    let slug = method.slug();
    let mut names = Vec::new();

    let json_path = out_dir.join("results.json");
    let mut doc = serde_json::to_string_pretty(results)
        .map_err(|e| Error::data(format!("results serialization: {e}")))?;
    doc.push('\n');
    fs::write(&json_path, doc).map_err(|e| Error::io(&json_path, e))?;
    names.push("results.json".to_string());

    let roc_csv = out_dir.join(format!("roc_{slug}.csv"));
    write_roc_csv(&roc_csv, &results.pooled_roc)?;
    names.push(format!("roc_{slug}.csv"));

    let roc_svg_path = out_dir.join(format!("roc_{slug}.svg"));
    let roc_series = vec![
        Series {
            label: format!("{} (AUC {:.4})", results.method, results.pooled_auc),
            points: results
                .pooled_roc
                .points
                .iter()
                .map(|p| (p.fpr, p.tpr))
                .collect(),
        },
        Series { label: "chance".to_string(), points: vec![(0.0, 0.0), (1.0, 1.0)] },
    ];
    let svg = line_plot(
        &format!("ROC — {}", results.method),
        "false positive rate",
        "true positive rate",
        &roc_series,
    );
    fs::write(&roc_svg_path, svg).map_err(|e| Error::io(&roc_svg_path, e))?;
    names.push(format!("roc_{slug}.svg"));

    if !results.learning_curves.iter().all(|c| c.is_empty()) {
        let avg = averaged_curve(&results.learning_curves);
        let curves_csv = out_dir.join(format!("curves_{slug}.csv"));
        write_curves_csv(&curves_csv, &avg)?;
        names.push(format!("curves_{slug}.csv"));

        let mut series = vec![
            Series {
                label: "train_loss".to_string(),
                points: avg.iter().map(|r| (r.epoch as f64, r.train_loss)).collect(),
            },
            Series {
                label: "train_acc".to_string(),
                points: avg
                    .iter()
                    .map(|r| (r.epoch as f64, r.train_accuracy))
                    .collect(),
            },
        ];
        if avg.iter().any(|r| r.val_loss.is_some()) {
            series.push(Series {
                label: "val_loss".to_string(),
                points: avg
                    .iter()
                    .filter_map(|r| r.val_loss.map(|v| (r.epoch as f64, v)))
                    .collect(),
            });
            series.push(Series {
                label: "val_acc".to_string(),
                points: avg
                    .iter()
                    .filter_map(|r| r.val_accuracy.map(|v| (r.epoch as f64, v)))
                    .collect(),
            });
        }
        let curves_svg_path = out_dir.join(format!("curves_{slug}.svg"));
        let svg = line_plot(
            &format!("Learning curves — {} (fold mean)", results.method),
            "epoch",
            "loss / accuracy",
            &series,
        );
        fs::write(&curves_svg_path, svg).map_err(|e| Error::io(&curves_svg_path, e))?;
        names.push(format!("curves_{slug}.svg"));
    }

    Ok(names)
}

fn write_roc_csv(path: &Path, roc: &RocCurve) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    w.write_record(["threshold", "fpr", "tpr"])
        .map_err(|e| csv_err(path, e))?;
    for p in &roc.points {
        w.write_record([p.threshold.to_string(), p.fpr.to_string(), p.tpr.to_string()])
            .map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

fn write_curves_csv(path: &Path, curve: &[EpochStats]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    w.write_record(["epoch", "train_loss", "val_loss", "train_acc", "val_acc"])
        .map_err(|e| csv_err(path, e))?;
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for row in curve {
        w.write_record([
            row.epoch.to_string(),
            row.train_loss.to_string(),
            opt(row.val_loss),
            row.train_accuracy.to_string(),
            opt(row.val_accuracy),
        ])
        .map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::data(format!("{}: {other:?}", path.display())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::TrainOverrides;
    use szbench_core::data::SynthSpec;

    fn synth_cfg(method: &str) -> ExperimentConfig {
        serde_json::from_str(&format!(
            r#"{{
                "dataset": {{ "kind": "synth", "spec": {{
                    "frames_per_class": 15,
                    "frame_samples": 120,
                    "channels": 3,
                    "frames_per_subject": 5,
                    "seed": 11
                }} }},
                "method": "{method}",
                "normalization": "zscore",
                "k": 3,
                "seed": 5
            }}"#
        ))
        .unwrap()
    }

    #[test]
    fn baseline_run_writes_all_artifacts_and_reports() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = synth_cfg("knn");
        let flags = RunFlags { out: Some(dir.path().to_path_buf()), ..Default::default() };
        let output = run_experiment(&cfg, &flags).unwrap();

        assert!(dir.path().join("results.json").is_file());
        assert!(dir.path().join("roc_knn.csv").is_file());
        assert!(dir.path().join("roc_knn.svg").is_file());
        assert!(!dir.path().join("curves_knn.csv").exists(), "no curves for baselines");

        assert_eq!(output.results.folds.len(), 3);
        assert_eq!(output.results.family, "classical");
        assert!(output.results.baseline_hyperparams.is_some());
        assert!(output.results.training.is_none());
        assert!(output.table.contains("knn"));

        let text = fs::read_to_string(dir.path().join("results.json")).unwrap();
        let back: ResultsDoc = serde_json::from_str(&text).unwrap();
        assert_eq!(back.method, "knn");
        assert_eq!(back.protocol.fold_assignments.len(), 30);
    }

    #[test]
    fn same_seed_runs_are_byte_identical_and_seed_changes_results() {
        let d1 = tempfile::tempdir().unwrap();
        let d2 = tempfile::tempdir().unwrap();
        let d3 = tempfile::tempdir().unwrap();
        let cfg = synth_cfg("rforest");
        let mk = |dir: &Path, seed: Option<u64>| RunFlags {
            out: Some(dir.to_path_buf()),
            seed,
            ..Default::default()
        };
        run_experiment(&cfg, &mk(d1.path(), None)).unwrap();
        run_experiment(&cfg, &mk(d2.path(), None)).unwrap();
        let a = fs::read(d1.path().join("results.json")).unwrap();
        let b = fs::read(d2.path().join("results.json")).unwrap();
        assert_eq!(a, b, "same-seed results.json must be byte-identical");

        run_experiment(&cfg, &mk(d3.path(), Some(6))).unwrap();
        let c = fs::read(d3.path().join("results.json")).unwrap();
        assert_ne!(a, c, "--seed override must change the document");
        let doc: ResultsDoc = serde_json::from_slice(&c).unwrap();
        assert_eq!(doc.protocol.seed, 6);
        assert_eq!(doc.config.seed, 6, "echoed config reflects the override");
    }

    #[test]
    fn deep_raw_requires_allow_raw_flag() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = synth_cfg("cnn1");
        cfg.normalization = Normalization::Raw;
        let flags = RunFlags { out: Some(dir.path().to_path_buf()), ..Default::default() };
        let err = run_experiment(&cfg, &flags).unwrap_err();
        assert!(matches!(err, Error::Config(_)), "got {err}");
        assert!(err.to_string().contains("--allow-raw"));

        // Baselines on raw features are fine without the flag.
        let cfg = ExperimentConfig {
            normalization: Normalization::Raw,
            ..synth_cfg("gnb")
        };
        run_experiment(&cfg, &flags).unwrap();
    }

    #[test]
    fn missing_out_dir_is_a_config_error() {
        let cfg = synth_cfg("knn");
        let err = run_experiment(&cfg, &RunFlags::default()).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }

    #[test]
    fn reduced_flag_thins_frames() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = synth_cfg("gnb");
        cfg.k = 2;
        let flags = RunFlags {
            out: Some(dir.path().to_path_buf()),
            reduced: true,
            ..Default::default()
        };
        let output = run_experiment(&cfg, &flags).unwrap();
        assert_eq!(output.results.dataset.frames, 6, "30 frames / 5");
        assert!(output.results.dataset.reduced);
    }

    #[test]
    fn averaged_curve_means_epochs_across_folds() {
        let mk = |loss: f64, val: Option<f64>| EpochStats {
            epoch: 0,
            train_loss: loss,
            train_accuracy: loss / 2.0,
            val_loss: val,
            val_accuracy: val,
        };
        let avg = averaged_curve(&[
            vec![mk(1.0, Some(2.0)), mk(0.5, Some(1.0))],
            vec![mk(3.0, Some(4.0)), mk(1.5, Some(3.0))],
        ]);
        assert_eq!(avg.len(), 2);
        assert_eq!(avg[0].train_loss, 2.0);
        assert_eq!(avg[0].val_loss, Some(3.0));
        assert_eq!(avg[1].epoch, 1);
        assert_eq!(avg[1].train_loss, 1.0);

        // Validation disabled => None survives averaging.
        let avg = averaged_curve(&[vec![mk(1.0, None)], vec![mk(2.0, None)]]);
        assert_eq!(avg[0].val_loss, None);
    }

    #[test]
    fn tiny_deep_run_trains_and_saves_checkpoints() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = ExperimentConfig {
            dataset: DatasetSource::Synth {
                spec: SynthSpec {
                    frames_per_class: 6,
                    frame_samples: 40,
                    channels: 2,
                    frames_per_subject: 3,
                    seed: 3,
                    burst_duty: 1.0,
                    ..SynthSpec::default()
                },
            },
            method: "CNN-1".to_string(),
            activation: None,
            normalization: Normalization::Zscore,
            k: 2,
            seed: 9,
            out: None,
            train: TrainOverrides {
                epochs: Some(1),
                batch_size: Some(4),
                ..Default::default()
            },
            baseline: BaselineHyperparams::default(),
            save_fold_models: true,
        };
        cfg.train.l2 = Some(0.0);
        let flags = RunFlags { out: Some(dir.path().to_path_buf()), ..Default::default() };
        let output = run_experiment(&cfg, &flags).unwrap();

        assert_eq!(output.results.family, "deep");
        assert_eq!(output.results.activation.as_deref(), Some("relu"));
        assert_eq!(output.results.learning_curves.len(), 2);
        assert!(dir.path().join("fold_0.szcp").is_file());
        assert!(dir.path().join("fold_1.szcp").is_file());
        assert!(dir.path().join("curves_cnn_1.csv").is_file());
        assert!(dir.path().join("curves_cnn_1.svg").is_file());
        let manifest = output.results.training.unwrap();
        assert_eq!(manifest.epochs, 1);
        assert_eq!(manifest.l2_coeff, 0.0);
    }
}
