//! Binary frame cache written by `ingest` and consumed by `run`.
//!
//! Layout:
//!
//! | bytes          | content                                        |
//! |----------------|------------------------------------------------|
//! | 0..4           | magic `SZBF`                                   |
//! | 4..8           | format version, little-endian u32 (currently 1)|
//! | 8..12          | JSON header length, little-endian u32          |
//! | 12..12+len     | JSON header (metadata, see below)              |
//! | rest           | frame payloads: little-endian f64, row-major   |
//!
//! The header records acquisition metadata, the per-frame labels, and a
//! SHA-256 digest of the source material so a stale cache can be detected.
//! Frames appear in the payload in header order, each exactly
//! `frame_samples * channels * 8` bytes. Writing is deterministic: the same
//! frame set and info produce byte-identical files.

use std::fs;
use std::io::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::Tensor;

use super::{Frame, FrameSet, Label, Normalization};

const MAGIC: &[u8; 4] = b"SZBF";
const VERSION: u32 = 1;

/// Provenance carried alongside the frames.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CacheInfo {
    /// Hex SHA-256 over the source files and manifest that produced the cache.
    pub source_hash: String,
}

#[derive(Serialize, Deserialize)]
struct FrameMeta {
    subject_id: String,
    label: Label,
    frame_index: usize,
    normalization: Normalization,
}

#[derive(Serialize, Deserialize)]
struct CacheHeader {
    sample_rate_hz: f64,
    channel_names: Vec<String>,
    frame_samples: usize,
    channels: usize,
    info: CacheInfo,
    frames: Vec<FrameMeta>,
}

pub fn write_cache(path: &Path, set: &FrameSet, info: &CacheInfo) -> Result<()> {
    set.validate()?;
    let first = set
        .frames
        .first()
        .ok_or_else(|| Error::data("refusing to cache an empty frame set".to_string()))?;
    let (t, c) = first.data.dims2()?;

    let header = CacheHeader {
        sample_rate_hz: set.sample_rate_hz,
        channel_names: set.channel_names.clone(),
        frame_samples: t,
        channels: c,
        info: info.clone(),
        frames: set
            .frames
            .iter()
            .map(|f| FrameMeta {
                subject_id: f.subject_id.clone(),
                label: f.label,
                frame_index: f.frame_index,
                normalization: f.normalization,
            })
            .collect(),
    };
    let header_json = serde_json::to_vec(&header)
        .map_err(|e| Error::data(format!("cache header serialization: {e}")))?;
    let header_len = u32::try_from(header_json.len())
        .map_err(|_| Error::data("cache header exceeds 4 GiB".to_string()))?;

    let mut file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut buf = std::io::BufWriter::new(&mut file);
    buf.write_all(MAGIC).map_err(|e| Error::io(path, e))?;
    buf.write_all(&VERSION.to_le_bytes())
        .map_err(|e| Error::io(path, e))?;
    buf.write_all(&header_len.to_le_bytes())
        .map_err(|e| Error::io(path, e))?;
    buf.write_all(&header_json).map_err(|e| Error::io(path, e))?;
    for frame in &set.frames {
        for v in frame.data.data() {
            buf.write_all(&v.to_le_bytes())
                .map_err(|e| Error::io(path, e))?;
        }
    }
    buf.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

pub fn read_cache(path: &Path) -> Result<(FrameSet, CacheInfo)> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let fail = |msg: &str| Error::data(format!("{}: {msg}", path.display()));

    if bytes.len() < 12 {
        return Err(fail("too short to be a frame cache"));
    }
    if &bytes[0..4] != MAGIC {
        return Err(fail("bad magic; not a frame cache"));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != VERSION {
        return Err(fail(&format!(
            "cache format version {version}, this build reads {VERSION}"
        )));
    }
    let header_len = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let payload_at = 12 + header_len;
    if bytes.len() < payload_at {
        return Err(fail("truncated header"));
    }
    let header: CacheHeader = serde_json::from_slice(&bytes[12..payload_at])
        .map_err(|e| fail(&format!("bad header: {e}")))?;

    let per_frame = header.frame_samples * header.channels;
    let expected = payload_at + header.frames.len() * per_frame * 8;
    if bytes.len() != expected {
        return Err(fail(&format!(
            "payload is {} bytes, expected {} for {} frames of {}x{}",
            bytes.len() - payload_at,
            expected - payload_at,
            header.frames.len(),
            header.frame_samples,
            header.channels
        )));
    }

    let mut frames = Vec::with_capacity(header.frames.len());
    let mut off = payload_at;
    for meta in header.frames {
        let mut data = Vec::with_capacity(per_frame);
        for _ in 0..per_frame {
            data.push(f64::from_le_bytes(bytes[off..off + 8].try_into().unwrap()));
            off += 8;
        }
        frames.push(Frame {
            subject_id: meta.subject_id,
            label: meta.label,
            frame_index: meta.frame_index,
            normalization: meta.normalization,
            data: Tensor::from_shape_vec(&[header.frame_samples, header.channels], data)?,
        });
    }

    let set = FrameSet {
        sample_rate_hz: header.sample_rate_hz,
        channel_names: header.channel_names,
        frames,
    };
    set.validate()?;
    Ok((set, header.info))
}
