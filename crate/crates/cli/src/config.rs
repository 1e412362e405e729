//! Experiment configuration: the JSON schema consumed by `run` and `grid`.
//!
//! A config names a dataset source, a method (one of the seven classical
//! baselines or the seven deep architectures), the data normalization, and
//! optional training/hyperparameter overrides:
//!
//! ```json
//! {
//!   "dataset": { "kind": "cache", "path": "frames.szbf" },
//!   "method": "CNN-LSTM-2",
//!   "activation": "relu",
//!   "normalization": "zscore_l2",
//!   "k": 5,
//!   "seed": 42,
//!   "out": "runs/headline",
//!   "train": { "epochs": 20, "batch_size": 16 }
//! }
//! ```
//!
//! Unknown fields anywhere in the document are rejected so typos fail loudly
//! (exit code 2) instead of silently running a different experiment.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use szbench_core::baselines::{BaselineHyperparams, BaselineKind};
use szbench_core::data::{Normalization, SynthSpec, FRAME_SAMPLES, SAMPLE_RATE_HZ};
use szbench_core::models::{ModelName, TrainConfig};
use szbench_core::nn::Activation;
use szbench_core::optim::OptimizerKind;
use szbench_core::{Error, Result};

/// Environment variable naming the dataset root; honored only when the
/// config's `recordings` source omits `data_dir`.
pub const DATA_DIR_ENV: &str = "SZBENCH_DATA_DIR";

/// Where the frames come from.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DatasetSource {
    /// Generated in memory from a seeded spec; no files involved.
    Synth { spec: SynthSpec },
    /// A frame cache previously written by `szbench ingest`.
    Cache { path: String },
    /// Signal files (EDF or CSV) listed in a dataset manifest, segmented on
    /// load. A sidecar frame cache next to the manifest is reused when its
    /// recorded source hash still matches the inputs.
    Recordings {
        manifest: String,
        /// Root for the manifest's relative file entries. When omitted, the
        /// `SZBENCH_DATA_DIR` environment variable applies if set, else the
        /// manifest's own directory.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        data_dir: Option<String>,
        /// Samples per frame cut from each recording.
        #[serde(default = "default_frame_samples")]
        frame_samples: usize,
        /// Sample rate assumed for CSV files (EDF files carry their own).
        #[serde(default = "default_csv_rate")]
        csv_sample_rate_hz: f64,
    },
}

fn default_frame_samples() -> usize {
    FRAME_SAMPLES
}

fn default_csv_rate() -> f64 {
    SAMPLE_RATE_HZ
}

/// Optional overrides of the per-family training defaults.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainOverrides {
    pub epochs: Option<usize>,
    pub batch_size: Option<usize>,
    pub learning_rate: Option<f64>,
    pub optimizer: Option<OptimizerKind>,
    pub validation_fraction: Option<f64>,
    /// L2 weight-regularization coefficient (default 0.01).
    pub l2: Option<f64>,
}

impl TrainOverrides {
    /// The family defaults for `name` with these overrides applied.
    pub fn resolve(&self, name: ModelName, seed: u64) -> TrainConfig {
        let base = TrainConfig::for_model(name);
        TrainConfig {
            epochs: self.epochs.unwrap_or(base.epochs),
            batch_size: self.batch_size.unwrap_or(base.batch_size),
            learning_rate: self.learning_rate.unwrap_or(base.learning_rate),
            optimizer: self.optimizer.unwrap_or(base.optimizer),
            seed,
            validation_fraction: self
                .validation_fraction
                .unwrap_or(base.validation_fraction),
        }
    }
}

/// One experiment: dataset × method × normalization × protocol.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dataset: DatasetSource,
    /// Method name; accepts loose spellings ("cnn_lstm_2", "random-forest").
    pub method: String,
    /// Hidden activation for deep models (default relu); ignored, with a
    /// warning, for baselines.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub activation: Option<String>,
    pub normalization: Normalization,
    /// Number of cross-validation folds.
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default)]
    pub seed: u64,
    /// Output directory; may instead be supplied as `--out`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<String>,
    #[serde(default)]
    pub train: TrainOverrides,
    /// Classical-method hyperparameters (all pinned defaults unless set).
    #[serde(default)]
    pub baseline: BaselineHyperparams,
    /// Write each fold's fitted model next to the results.
    #[serde(default)]
    pub save_fold_models: bool,
}

fn default_k() -> usize {
    5
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg: ExperimentConfig = serde_json::from_str(&text)
            .map_err(|e| Error::config(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.method.parse::<Method>()?;
        if let Some(act) = &self.activation {
            act.parse::<Activation>()?;
        }
        if self.k < 2 {
            return Err(Error::config(format!(
                "k must be at least 2, got {}",
                self.k
            )));
        }
        self.baseline.validate()?;
        if let Some(l2) = self.train.l2 {
            if !(l2 >= 0.0 && l2.is_finite()) {
                return Err(Error::config(format!(
                    "train.l2 must be non-negative and finite, got {l2}"
                )));
            }
        }
        if let DatasetSource::Recordings { frame_samples, csv_sample_rate_hz, .. } = &self.dataset
        {
            if *frame_samples == 0 {
                return Err(Error::config("frame_samples must be positive".to_string()));
            }
            if !(*csv_sample_rate_hz > 0.0) {
                return Err(Error::config(
                    "csv_sample_rate_hz must be positive".to_string(),
                ));
            }
        }
        Ok(())
    }
}

/// A parsed method: one of the seven deep architectures or the seven
/// classical baselines.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    Deep(ModelName),
    Baseline(BaselineKind),
}

impl Method {
    /// Canonical display name ("CNN-LSTM-2", "bagging").
    pub fn label(&self) -> String {
        match self {
            Method::Deep(name) => name.as_str().to_string(),
            Method::Baseline(kind) => kind.to_string(),
        }
    }

    /// Lowercase filename-safe identifier ("cnn_lstm_2", "bagging").
    pub fn slug(&self) -> String {
        self.label()
            .chars()
            .map(|c| {
                if c.is_ascii_alphanumeric() {
                    c.to_ascii_lowercase()
                } else {
                    '_'
                }
            })
            .collect()
    }

    pub fn is_deep(&self) -> bool {
        matches!(self, Method::Deep(_))
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if let Ok(name) = s.parse::<ModelName>() {
            return Ok(Method::Deep(name));
        }
        if let Ok(kind) = s.parse::<BaselineKind>() {
            return Ok(Method::Baseline(kind));
        }
        Err(Error::config(format!(
            "unknown method '{s}' (deep: CNN-1, CNN-2, CNN-3, LSTM-1, LSTM-2, \
             CNN-LSTM-1, CNN-LSTM-2; classical: svm_rbf, knn, dtree, gnb, \
             rforest, etrees, bagging)"
        )))
    }
}

/// A list of experiments executed by `szbench grid`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub runs: Vec<ExperimentConfig>,
}

impl GridConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let grid: GridConfig = serde_json::from_str(&text)
            .map_err(|e| Error::config(format!("{}: {e}", path.display())))?;
        grid.validate()?;
        Ok(grid)
    }

    /// Only the grid itself is checked here; each run is validated when it
    /// executes, so one bad run fails alone instead of aborting the sweep.
    pub fn validate(&self) -> Result<()> {
        if self.runs.is_empty() {
            return Err(Error::config("grid lists no runs".to_string()));
        }
        Ok(())
    }
}
