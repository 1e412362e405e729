//! Synthetic corpus generator for tests, demos, and offline smoke runs.
//!
//! Healthy-control frames are unit-variance Gaussian noise. Schizophrenia
//! frames add a 10 Hz sinusoidal burst at a random position and phase,
//! applied across all channels — an easily learnable oscillatory signature
//! with no positional shortcut. The burst covers `burst_duty` of the frame
//! (default 40%; 1.0 makes the oscillation span the whole frame, the right
//! choice when a recurrent readout must see class evidence near the frame
//! end). Everything is seeded, so a given `SynthSpec` always produces
//! identical data.

use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{derived_rng, Rng};
use crate::tensor::Tensor;

use super::{Frame, FrameSet, Label, Normalization, RawRecording, MONTAGE};

const BURST_FREQ_HZ: f64 = 10.0;
/// Physical scale applied to synthetic recordings so they resemble scalp EEG
/// in microvolts.
const RECORDING_SCALE_UV: f64 = 50.0;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthSpec {
    /// Frames generated per class by [`synthetic_frames`].
    pub frames_per_class: usize,
    pub frame_samples: usize,
    pub channels: usize,
    pub sample_rate_hz: f64,
    /// Consecutive frames attributed to one synthetic subject.
    pub frames_per_subject: usize,
    pub seed: u64,
    /// Peak amplitude of the 10 Hz burst, in noise standard deviations.
    pub burst_amplitude: f64,
    /// Fraction of the frame the burst covers, in `(0, 1]`.
    pub burst_duty: f64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            frames_per_class: 100,
            frame_samples: 1250,
            channels: 19,
            sample_rate_hz: 250.0,
            frames_per_subject: 5,
            seed: 7,
            burst_amplitude: 2.0,
            burst_duty: 0.4,
        }
    }
}

impl SynthSpec {
    fn validate(&self) -> Result<()> {
        if self.frames_per_class == 0
            || self.frame_samples == 0
            || self.channels == 0
            || self.frames_per_subject == 0
        {
            return Err(Error::config(
                "synthetic spec requires positive counts and sizes".to_string(),
            ));
        }
        if !(self.sample_rate_hz > 0.0) || !self.burst_amplitude.is_finite() {
            return Err(Error::config(
                "synthetic spec requires a positive rate and finite amplitude".to_string(),
            ));
        }
        if !(self.burst_duty > 0.0 && self.burst_duty <= 1.0) {
            return Err(Error::config(
                "burst_duty must lie in (0, 1]".to_string(),
            ));
        }
        Ok(())
    }
}

fn channel_names(channels: usize) -> Vec<String> {
    (0..channels)
        .map(|i| match MONTAGE.get(i) {
            Some(name) => name.to_string(),
            None => format!("X{}", i - MONTAGE.len() + 1),
        })
        .collect()
}

/// One frame of class-conditional signal, row-major `[t, c]`.
fn frame_data(spec: &SynthSpec, label: Label, rng: &mut Rng) -> Vec<f64> {
    let (t, c) = (spec.frame_samples, spec.channels);
    let mut data = vec![0.0; t * c];
    for v in &mut data {
        *v = rng.sample(StandardNormal);
    }
    if label == Label::Sz {
        let burst_len = ((t as f64) * spec.burst_duty).round().max(1.0) as usize;
        let burst_len = burst_len.min(t);
        let start = if t > burst_len {
            rng.gen_range(0..=t - burst_len)
        } else {
            0
        };
        let phase: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
        let omega = std::f64::consts::TAU * BURST_FREQ_HZ / spec.sample_rate_hz;
        for i in 0..burst_len {
            let s = spec.burst_amplitude * (omega * i as f64 + phase).sin();
            let row = (start + i) * c;
            for ch in 0..c {
                data[row + ch] += s;
            }
        }
    }
    data
}

/// Generates a balanced, labelled, raw frame set.
pub fn synthetic_frames(spec: &SynthSpec) -> Result<FrameSet> {
    spec.validate()?;
    let mut frames = Vec::with_capacity(spec.frames_per_class * 2);
    let mut global = 0u64;
    for (label, prefix) in [(Label::Sz, "sz"), (Label::Hc, "hc")] {
        for i in 0..spec.frames_per_class {
            let mut rng = derived_rng(spec.seed, "synth-frame", global);
            global += 1;
            frames.push(Frame {
                subject_id: format!("synth-{prefix}-{:03}", i / spec.frames_per_subject),
                label,
                frame_index: i % spec.frames_per_subject,
                normalization: Normalization::Raw,
                data: Tensor::from_shape_vec(
                    &[spec.frame_samples, spec.channels],
                    frame_data(spec, label, &mut rng),
                )?,
            });
        }
    }
    let set = FrameSet {
        sample_rate_hz: spec.sample_rate_hz,
        channel_names: channel_names(spec.channels),
        frames,
    };
    set.validate()?;
    Ok(set)
}

/// Generates continuous raw recordings, `subjects_per_class` per class, in
/// microvolt scale. Each holds `frames_per_subject` frame-lengths of signal
/// plus a sub-frame tail, so segmentation drops a remainder.
pub fn synthetic_recordings(
    spec: &SynthSpec,
    subjects_per_class: usize,
) -> Result<Vec<RawRecording>> {
    spec.validate()?;
    if subjects_per_class == 0 {
        return Err(Error::config(
            "synthetic recordings require at least one subject per class".to_string(),
        ));
    }
    let c = spec.channels;
    let tail = spec.frame_samples / 3;
    let n = spec.frames_per_subject * spec.frame_samples + tail;
    let mut recordings = Vec::with_capacity(subjects_per_class * 2);
    let mut idx = 0u64;
    for (label, prefix) in [(Label::Sz, "sz"), (Label::Hc, "hc")] {
        for s in 0..subjects_per_class {
            let mut rng = derived_rng(spec.seed, "synth-subject", idx);
            idx += 1;
            let mut data = Vec::with_capacity(n * c);
            for _ in 0..spec.frames_per_subject {
                data.extend(frame_data(spec, label, &mut rng));
            }
            for _ in 0..tail * c {
                data.push(rng.sample::<f64, _>(StandardNormal));
            }
            for v in &mut data {
                *v *= RECORDING_SCALE_UV;
            }
            recordings.push(RawRecording {
                subject_id: format!("synth-{prefix}-{s:03}"),
                label,
                sample_rate_hz: spec.sample_rate_hz,
                channel_names: channel_names(c),
                samples: Tensor::from_shape_vec(&[n, c], data)?,
            });
        }
    }
    Ok(recordings)
}
