//! EEG dataset handling: recordings, frames, normalisation and CV splits.
//!
//! The benchmark's data model is a two-class corpus of multichannel EEG
//! recordings sampled at 250 Hz over the standard 19-electrode 10-20 montage.
//! Recordings are segmented into fixed-length frames (25 s → 6250 samples by
//! default), normalised per channel, and assigned to stratified
//! cross-validation folds.

mod cache;
mod csvio;
mod edf;
mod manifest;
mod synth;

pub use cache::{read_cache, write_cache, CacheInfo};
pub use csvio::{load_csv, write_csv};
pub use edf::{load_edf, write_edf, EdfFile, EdfSignal};
pub use manifest::{DatasetManifest, SubjectEntry};
pub use synth::{synthetic_frames, synthetic_recordings, SynthSpec};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Electrodes of the 10-20 montage used by the benchmark corpus, in the
/// canonical channel order.
pub const MONTAGE: [&str; 19] = [
    "Fp1", "Fp2", "F7", "F3", "Fz", "F4", "F8", "T3", "C3", "Cz", "C4", "T4", "T5", "P3", "Pz",
    "P4", "T6", "O1", "O2",
];

/// Number of EEG channels in the canonical montage.
pub const CHANNEL_COUNT: usize = 19;

/// Acquisition rate of the corpus.
pub const SAMPLE_RATE_HZ: f64 = 250.0;

/// Samples per 25-second analysis frame at 250 Hz.
pub const FRAME_SAMPLES: usize = 6250;

/// Diagnostic class. The positive class (`Sz`) sorts first everywhere:
/// class index 0, prediction ties, report ordering.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Label {
    #[serde(rename = "SZ")]
    Sz,
    #[serde(rename = "HC")]
    Hc,
}

impl Label {
    pub fn as_str(&self) -> &'static str {
        match self {
            Label::Sz => "SZ",
            Label::Hc => "HC",
        }
    }

    /// Class index: SZ = 0, HC = 1 (used for one-hot heads and tallies).
    pub fn index(&self) -> usize {
        match self {
            Label::Sz => 0,
            Label::Hc => 1,
        }
    }

    /// Scalar training target for single-unit sigmoid heads: SZ = 1, HC = 0.
    pub fn target(&self) -> f64 {
        match self {
            Label::Sz => 1.0,
            Label::Hc => 0.0,
        }
    }

    pub fn from_index(index: usize) -> Result<Label> {
        match index {
            0 => Ok(Label::Sz),
            1 => Ok(Label::Hc),
            other => Err(Error::data(format!("invalid class index {other}"))),
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "SZ" => Ok(Label::Sz),
            "HC" => Ok(Label::Hc),
            other => Err(Error::data(format!(
                "unknown label '{other}' (expected SZ or HC)"
            ))),
        }
    }
}

/// Per-channel normalisation applied to a frame.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    /// Untouched microvolt values.
    Raw,
    /// Per-channel zero mean, unit (population) standard deviation.
    Zscore,
    /// Z-score followed by per-channel scaling to unit L2 norm.
    ZscoreL2,
}

impl fmt::Display for Normalization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Normalization::Raw => f.write_str("raw"),
            Normalization::Zscore => f.write_str("zscore"),
            Normalization::ZscoreL2 => f.write_str("zscore_l2"),
        }
    }
}

impl FromStr for Normalization {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "raw" => Ok(Normalization::Raw),
            "zscore" | "z-score" => Ok(Normalization::Zscore),
            "zscore_l2" | "zscore-l2" | "z-score-l2" => Ok(Normalization::ZscoreL2),
            other => Err(Error::config(format!("unknown normalization '{other}'"))),
        }
    }
}

/// One subject's continuous multichannel recording.
#[derive(Clone, Debug)]
pub struct RawRecording {
    pub subject_id: String,
    pub label: Label,
    pub sample_rate_hz: f64,
    pub channel_names: Vec<String>,
    /// `[samples, channels]`, channel order matching `channel_names`.
    pub samples: Tensor,
}

impl RawRecording {
    pub fn num_samples(&self) -> usize {
        self.samples.shape()[0]
    }

    pub fn num_channels(&self) -> usize {
        self.samples.shape()[1]
    }

    pub fn validate(&self) -> Result<()> {
        let (_, c) = self.samples.dims2()?;
        if c != self.channel_names.len() {
            return Err(Error::shape(format!(
                "recording {}: {} channel names for {} data channels",
                self.subject_id,
                self.channel_names.len(),
                c
            )));
        }
        if self.sample_rate_hz <= 0.0 {
            return Err(Error::data(format!(
                "recording {}: non-positive sample rate",
                self.subject_id
            )));
        }
        if !self.samples.all_finite() {
            return Err(Error::numerics(format!(
                "recording {}: non-finite sample values",
                self.subject_id
            )));
        }
        Ok(())
    }
}

/// One fixed-length analysis window cut from a recording.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Frame {
    pub subject_id: String,
    pub label: Label,
    /// Position of this frame within its source recording (0-based).
    pub frame_index: usize,
    pub normalization: Normalization,
    /// `[frame_samples, channels]`.
    pub data: Tensor,
}

impl Frame {
    pub fn num_samples(&self) -> usize {
        self.data.shape()[0]
    }

    pub fn num_channels(&self) -> usize {
        self.data.shape()[1]
    }
}

/// A labelled frame corpus with shared acquisition metadata.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FrameSet {
    pub sample_rate_hz: f64,
    pub channel_names: Vec<String>,
    pub frames: Vec<Frame>,
}

impl FrameSet {
    /// Frames per class as `[sz, hc]`.
    pub fn class_counts(&self) -> [usize; 2] {
        let mut counts = [0usize; 2];
        for f in &self.frames {
            counts[f.label.index()] += 1;
        }
        counts
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    /// Checks that every frame agrees on shape and normalisation.
    pub fn validate(&self) -> Result<()> {
        let Some(first) = self.frames.first() else {
            return Err(Error::data("frame set is empty".to_string()));
        };
        let shape = first.data.shape().to_vec();
        let norm = first.normalization;
        for (i, f) in self.frames.iter().enumerate() {
            if f.data.shape() != shape.as_slice() {
                return Err(Error::shape(format!(
                    "frame {i} has shape {:?}, expected {shape:?}",
                    f.data.shape()
                )));
            }
            if f.normalization != norm {
                return Err(Error::data(format!(
                    "frame {i} normalization {} differs from {}",
                    f.normalization, norm
                )));
            }
            if !f.data.all_finite() {
                return Err(Error::numerics(format!("frame {i} has non-finite values")));
            }
        }
        if self.channel_names.len() != first.num_channels() {
            return Err(Error::shape(format!(
                "{} channel names for {}-channel frames",
                self.channel_names.len(),
                first.num_channels()
            )));
        }
        Ok(())
    }

    /// Keeps every `step`-th frame (reduced smoke-test mode).
    pub fn thin(&self, step: usize) -> Result<FrameSet> {
        if step == 0 {
            return Err(Error::config("thinning step must be positive".to_string()));
        }
        Ok(FrameSet {
            sample_rate_hz: self.sample_rate_hz,
            channel_names: self.channel_names.clone(),
            frames: self
                .frames
                .iter()
                .step_by(step)
                .cloned()
                .collect(),
        })
    }
}

/// Cuts a recording into consecutive non-overlapping frames of
/// `frame_samples`; a trailing remainder shorter than one frame is dropped.
pub fn segment(recording: &RawRecording, frame_samples: usize) -> Result<Vec<Frame>> {
    recording.validate()?;
    if frame_samples == 0 {
        return Err(Error::config("frame length must be positive".to_string()));
    }
    let (n, c) = recording.samples.dims2()?;
    if n < frame_samples {
        return Err(Error::data(format!(
            "recording {} has {n} samples, shorter than one {frame_samples}-sample frame",
            recording.subject_id
        )));
    }
    let count = n / frame_samples;
    let data = recording.samples.data();
    let mut frames = Vec::with_capacity(count);
    for i in 0..count {
        let start = i * frame_samples * c;
        let slice = data[start..start + frame_samples * c].to_vec();
        frames.push(Frame {
            subject_id: recording.subject_id.clone(),
            label: recording.label,
            frame_index: i,
            normalization: Normalization::Raw,
            data: Tensor::from_shape_vec(&[frame_samples, c], slice)?,
        });
    }
    Ok(frames)
}

/// Result of [`normalize`]: the transformed frame plus the indices of any
/// constant channels that were zeroed instead of divided by σ = 0.
#[derive(Clone, Debug)]
pub struct Normalized {
    pub frame: Frame,
    pub zero_variance_channels: Vec<usize>,
}

/// Per-channel normalisation of a raw frame. Constant channels (σ below
/// `1e-12 · max(1, |μ|)`) are zeroed and reported rather than divided.
pub fn normalize(frame: &Frame, scheme: Normalization) -> Result<Normalized> {
    if frame.normalization != Normalization::Raw {
        return Err(Error::data(format!(
            "frame is already normalized ({})",
            frame.normalization
        )));
    }
    if scheme == Normalization::Raw {
        return Ok(Normalized {
            frame: frame.clone(),
            zero_variance_channels: Vec::new(),
        });
    }
    let (t, c) = frame.data.dims2()?;
    if t < 2 {
        return Err(Error::data(
            "cannot normalize a frame with fewer than 2 samples".to_string(),
        ));
    }
    let src = frame.data.data();
    let mut out = vec![0.0; t * c];
    let mut degenerate = Vec::new();
    for ch in 0..c {
        let mut mean = 0.0;
        for row in 0..t {
            mean += src[row * c + ch];
        }
        mean /= t as f64;
        let mut var = 0.0;
        for row in 0..t {
            let d = src[row * c + ch] - mean;
            var += d * d;
        }
        // Population variance, matching the reported ±std convention.
        var /= t as f64;
        let std = var.sqrt();
        if std <= 1e-12 * mean.abs().max(1.0) {
            degenerate.push(ch);
            continue; // channel stays all-zero
        }
        for row in 0..t {
            out[row * c + ch] = (src[row * c + ch] - mean) / std;
        }
        if scheme == Normalization::ZscoreL2 {
            let mut norm_sq = 0.0;
            for row in 0..t {
                let v = out[row * c + ch];
                norm_sq += v * v;
            }
            let norm = norm_sq.sqrt();
            for row in 0..t {
                out[row * c + ch] /= norm;
            }
        }
    }
    Ok(Normalized {
        frame: Frame {
            subject_id: frame.subject_id.clone(),
            label: frame.label,
            frame_index: frame.frame_index,
            normalization: scheme,
            data: Tensor::from_shape_vec(&[t, c], out)?,
        },
        zero_variance_channels: degenerate,
    })
}

/// Row-major (time-major) flattening of a frame into one feature vector of
/// length `samples * channels`, as consumed by the classical baselines.
pub fn flatten_frame(frame: &Frame) -> Vec<f64> {
    frame.data.data().to_vec()
}

/// Stratified fold assignment over a frame set.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FoldSplit {
    pub k: usize,
    pub seed: u64,
    /// `assignments[i]` is the fold id of `frames[i]`.
    pub assignments: Vec<usize>,
}

impl FoldSplit {
    pub fn test_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.assignments.len())
            .filter(|&i| self.assignments[i] == fold)
            .collect()
    }

    pub fn train_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.assignments.len())
            .filter(|&i| self.assignments[i] != fold)
            .collect()
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0usize; self.k];
        for &a in &self.assignments {
            sizes[a] += 1;
        }
        sizes
    }
}

/// Stratified k-fold split at frame granularity.
///
/// Each class's frames are shuffled independently (seeded), then dealt
/// round-robin with a single rolling counter shared across classes, so fold
/// sizes differ by at most one both overall and within each class, and every
/// fold contains every class.
pub fn split_kfold(set: &FrameSet, k: usize, seed: u64) -> Result<FoldSplit> {
    if k < 2 {
        return Err(Error::config(format!("k-fold needs k >= 2, got {k}")));
    }
    let counts = set.class_counts();
    for (class, &count) in counts.iter().enumerate() {
        if count < k {
            return Err(Error::data(format!(
                "class {} has only {count} frames, fewer than k = {k}",
                Label::from_index(class)?
            )));
        }
    }
    let mut assignments = vec![0usize; set.len()];
    let mut counter = 0usize;
    for class in 0..2 {
        let mut indices: Vec<usize> = (0..set.len())
            .filter(|&i| set.frames[i].label.index() == class)
            .collect();
        shuffle(
            &mut indices,
            &mut crate::rng::derived_rng(seed, "kfold-class", class as u64),
        );
        for idx in indices {
            assignments[idx] = counter % k;
            counter += 1;
        }
    }
    Ok(FoldSplit {
        k,
        seed,
        assignments,
    })
}

/// Stratified k-fold split at subject granularity: all frames of one subject
/// land in the same fold, preventing within-subject leakage across folds.
pub fn split_kfold_by_subject(set: &FrameSet, k: usize, seed: u64) -> Result<FoldSplit> {
    if k < 2 {
        return Err(Error::config(format!("k-fold needs k >= 2, got {k}")));
    }
    // Subjects per class, in order of first appearance.
    let mut subjects: Vec<(String, Label)> = Vec::new();
    for f in &set.frames {
        if !subjects.iter().any(|(s, _)| s == &f.subject_id) {
            subjects.push((f.subject_id.clone(), f.label));
        }
    }
    let mut subject_fold: Vec<(String, usize)> = Vec::new();
    let mut counter = 0usize;
    for class in 0..2 {
        let mut class_subjects: Vec<&(String, Label)> = subjects
            .iter()
            .filter(|(_, l)| l.index() == class)
            .collect();
        if class_subjects.len() < k {
            return Err(Error::data(format!(
                "class {} has only {} subjects, fewer than k = {k}",
                Label::from_index(class)?,
                class_subjects.len()
            )));
        }
        shuffle(
            &mut class_subjects,
            &mut crate::rng::derived_rng(seed, "kfold-subject", class as u64),
        );
        for (sid, _) in class_subjects {
            subject_fold.push((sid.clone(), counter % k));
            counter += 1;
        }
    }
    let assignments = set
        .frames
        .iter()
        .map(|f| {
            subject_fold
                .iter()
                .find(|(s, _)| s == &f.subject_id)
                .map(|(_, fold)| *fold)
                .expect("every frame's subject was collected above")
        })
        .collect();
    Ok(FoldSplit {
        k,
        seed,
        assignments,
    })
}

/// Fisher-Yates shuffle driven by the benchmark RNG.
pub(crate) fn shuffle<T>(items: &mut [T], rng: &mut crate::rng::Rng) {
    use rand::Rng as _;
    for i in (1..items.len()).rev() {
        let j = rng.gen_range(0..=i);
        items.swap(i, j);
    }
}
