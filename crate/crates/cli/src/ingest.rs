//! Dataset ingestion: manifest-listed EDF/CSV recordings → segmented raw
//! frames → binary frame cache.
//!
//! The same loading path backs the `ingest` subcommand and the `recordings`
//! dataset source of `run`. Every load computes a SHA-256 digest over the
//! manifest and all referenced signal files, so caches are reliably
//! invalidated when any input byte changes.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use szbench_core::data::{
    load_csv, load_edf, segment, write_cache, CacheInfo, DatasetManifest, FrameSet, Label,
    RawRecording, CHANNEL_COUNT,
};
use szbench_core::{Error, Result};

use crate::config::DATA_DIR_ENV;

/// What a manifest load produced, beyond the frames themselves.
#[derive(Debug)]
pub struct LoadedDataset {
    pub set: FrameSet,
    /// Hex SHA-256 over manifest bytes, per-entry identity, signal file
    /// bytes, and the frame length.
    pub source_hash: String,
    /// Subjects per class (SZ, HC).
    pub subjects: [usize; 2],
    /// Non-fatal observations (unusual channel counts, etc.).
    pub warnings: Vec<String>,
}

/// The directory that relative manifest entries resolve against: an explicit
/// root wins, else the `SZBENCH_DATA_DIR` environment variable, else the
/// manifest's own directory.
pub fn resolve_data_root(manifest_path: &Path, explicit: Option<&Path>) -> PathBuf {
    if let Some(dir) = explicit {
        return dir.to_path_buf();
    }
    if let Some(env_dir) = std::env::var_os(DATA_DIR_ENV) {
        if !env_dir.is_empty() {
            return PathBuf::from(env_dir);
        }
    }
    manifest_path
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("."))
}

/// Loads every recording named by the manifest and segments it into raw
/// frames of `frame_samples`. CSV files are assumed to be sampled at
/// `csv_sample_rate_hz`; EDF files carry their own rate.
pub fn load_manifest_frames(
    manifest_path: &Path,
    data_dir: Option<&Path>,
    frame_samples: usize,
    csv_sample_rate_hz: f64,
) -> Result<LoadedDataset> {
    let manifest = DatasetManifest::load(manifest_path)?;
    let root = resolve_data_root(manifest_path, data_dir);

    let manifest_bytes = fs::read(manifest_path).map_err(|e| Error::io(manifest_path, e))?;
    let mut hasher = Sha256::new();
    hasher.update(b"szbench-frames-v1\0");
    hasher.update((manifest_bytes.len() as u64).to_le_bytes());
    hasher.update(&manifest_bytes);
    hasher.update((frame_samples as u64).to_le_bytes());
    hasher.update(csv_sample_rate_hz.to_le_bytes());

    let mut warnings = Vec::new();
    let mut recordings: Vec<RawRecording> = Vec::with_capacity(manifest.subjects.len());
    for entry in &manifest.subjects {
        let path = entry.resolved_path(&root);
        let subject_id = entry.subject_id();

        let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
        hasher.update(subject_id.as_bytes());
        hasher.update([0u8, entry.label.index() as u8]);
        hasher.update((bytes.len() as u64).to_le_bytes());
        hasher.update(&bytes);

        let ext = path
            .extension()
            .map(|e| e.to_string_lossy().to_ascii_lowercase())
            .unwrap_or_default();
        let rec = match ext.as_str() {
            "edf" => load_edf(&path)?.into_recording(&subject_id, entry.label)?,
            "csv" => {
                let (channel_names, samples) = load_csv(&path)?;
                let rec = RawRecording {
                    subject_id: subject_id.clone(),
                    label: entry.label,
                    sample_rate_hz: csv_sample_rate_hz,
                    channel_names,
                    samples,
                };
                rec.validate()?;
                rec
            }
            other => {
                return Err(Error::data(format!(
                    "{}: unsupported signal file extension '{other}' (expected .edf or .csv)",
                    path.display()
                )))
            }
        };
        if rec.num_channels() != CHANNEL_COUNT {
            warnings.push(format!(
                "{subject_id}: {} channels (the reference montage has {CHANNEL_COUNT})",
                rec.num_channels()
            ));
        }
        recordings.push(rec);
    }

    let first = recordings
        .first()
        .ok_or_else(|| Error::config("manifest lists no subjects".to_string()))?;
    let channels = first.num_channels();
    let sample_rate_hz = first.sample_rate_hz;
    let channel_names = first.channel_names.clone();
    for rec in &recordings {
        if rec.num_channels() != channels {
            return Err(Error::data(format!(
                "recording {} has {} channels, {} has {channels}; \
                 a frame set must be homogeneous",
                rec.subject_id,
                rec.num_channels(),
                first.subject_id
            )));
        }
        if rec.sample_rate_hz != sample_rate_hz {
            return Err(Error::data(format!(
                "recording {} is sampled at {} Hz, {} at {sample_rate_hz} Hz",
                rec.subject_id, rec.sample_rate_hz, first.subject_id
            )));
        }
    }

    let mut frames = Vec::new();
    for rec in &recordings {
        frames.extend(segment(rec, frame_samples)?);
    }
    let set = FrameSet { sample_rate_hz, channel_names, frames };
    set.validate()?;

    let mut subjects = [0usize; 2];
    for rec in &recordings {
        subjects[rec.label.index()] += 1;
    }

    Ok(LoadedDataset {
        set,
        source_hash: format!("{:x}", hasher.finalize()),
        subjects,
        warnings,
    })
}

/// Distinct subject counts (SZ, HC) appearing in a frame set.
pub fn count_subjects(set: &FrameSet) -> [usize; 2] {
    let mut seen: BTreeSet<(usize, &str)> = BTreeSet::new();
    for f in &set.frames {
        seen.insert((f.label.index(), f.subject_id.as_str()));
    }
    let mut counts = [0usize; 2];
    for (label_idx, _) in seen {
        counts[label_idx] += 1;
    }
    counts
}

/// The `ingest` subcommand: load, segment, cache, and summarize.
pub fn cmd_ingest(
    manifest: &Path,
    data_dir: Option<&Path>,
    out: &Path,
    frame_samples: usize,
    csv_sample_rate_hz: f64,
) -> Result<String> {
    if frame_samples == 0 {
        return Err(Error::config("frame length must be positive".to_string()));
    }
    if !(csv_sample_rate_hz > 0.0) {
        return Err(Error::config(
            "csv sample rate must be positive".to_string(),
        ));
    }
    let loaded = load_manifest_frames(manifest, data_dir, frame_samples, csv_sample_rate_hz)?;
    if let Some(parent) = out.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
    }
    write_cache(out, &loaded.set, &CacheInfo { source_hash: loaded.source_hash.clone() })?;

    let counts = loaded.set.class_counts();
    let mut text = String::new();
    for w in &loaded.warnings {
        text.push_str(&format!("warning: {w}\n"));
    }
    text.push_str(&format!(
        "subjects: {} ({} {} / {} {})\n",
        loaded.subjects[0] + loaded.subjects[1],
        loaded.subjects[0],
        Label::Sz.as_str(),
        loaded.subjects[1],
        Label::Hc.as_str(),
    ));
    text.push_str(&format!(
        "frames:   {} ({} {} / {} {}), {}x{} @ {} Hz\n",
        loaded.set.len(),
        counts[0],
        Label::Sz.as_str(),
        counts[1],
        Label::Hc.as_str(),
        frame_samples,
        loaded.set.channel_names.len(),
        loaded.set.sample_rate_hz,
    ));
    text.push_str(&format!(
        "cache:    {} (source sha256 {})\n",
        out.display(),
        &loaded.source_hash[..12],
    ));
    Ok(text)
}
