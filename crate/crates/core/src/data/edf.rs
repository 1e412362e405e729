//! Reader and writer for the European Data Format (EDF).
//!
//! EDF stores a 256-byte ASCII header, one 256-byte header block per signal
//! (field-major: all labels, then all transducer fields, …), and then data
//! records of interleaved 16-bit little-endian two's-complement samples.
//! Digital values map to physical units linearly:
//!
//! `physical = (digital - dig_min) * (phys_max - phys_min) / (dig_max - dig_min) + phys_min`
//!
//! The writer always produces one-second records and derives the physical
//! range from the data; it re-parses the 8-character range fields it printed
//! so that writer and reader agree on the calibration exactly.

use std::fs;
use std::io::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::tensor::Tensor;

use super::{Label, RawRecording};

/// One decoded EDF signal.
#[derive(Clone, Debug)]
pub struct EdfSignal {
    pub label: String,
    pub physical_dimension: String,
    pub samples_per_record: usize,
    /// Calibrated physical values, all records concatenated.
    pub samples: Vec<f64>,
}

/// A decoded EDF file.
#[derive(Clone, Debug)]
pub struct EdfFile {
    pub record_duration_s: f64,
    pub num_records: usize,
    pub signals: Vec<EdfSignal>,
}

impl EdfFile {
    /// Converts to a recording, requiring a uniform sample rate across
    /// channels. `subject_id` and `label` come from the dataset manifest —
    /// EDF itself carries no diagnosis.
    pub fn into_recording(self, subject_id: &str, label: Label) -> Result<RawRecording> {
        if self.signals.is_empty() {
            return Err(Error::data("edf file contains no signals".to_string()));
        }
        let spr = self.signals[0].samples_per_record;
        for s in &self.signals {
            if s.samples_per_record != spr {
                return Err(Error::data(format!(
                    "mixed sample rates: signal '{}' has {} samples/record, '{}' has {}",
                    s.label, s.samples_per_record, self.signals[0].label, spr
                )));
            }
        }
        if self.record_duration_s <= 0.0 {
            return Err(Error::data("non-positive record duration".to_string()));
        }
        let sample_rate_hz = spr as f64 / self.record_duration_s;
        let n = self.num_records * spr;
        let c = self.signals.len();
        let mut data = vec![0.0; n * c];
        for (ch, sig) in self.signals.iter().enumerate() {
            for (row, &v) in sig.samples.iter().enumerate() {
                data[row * c + ch] = v;
            }
        }
        let rec = RawRecording {
            subject_id: subject_id.to_string(),
            label,
            sample_rate_hz,
            channel_names: self.signals.into_iter().map(|s| s.label).collect(),
            samples: Tensor::from_shape_vec(&[n, c], data)?,
        };
        rec.validate()?;
        Ok(rec)
    }
}

fn ascii(bytes: &[u8]) -> String {
    String::from_utf8_lossy(bytes).trim().to_string()
}

fn parse_num<T: std::str::FromStr>(bytes: &[u8], what: &str) -> Result<T> {
    let s = ascii(bytes);
    s.parse().map_err(|_| {
        Error::data(format!("edf header: cannot parse {what} from '{s}'"))
    })
}

/// Reads and calibrates an EDF file.
pub fn load_edf(path: &Path) -> Result<EdfFile> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.len() < 256 {
        return Err(Error::data(format!(
            "{}: file too short for an edf header ({} bytes)",
            path.display(),
            bytes.len()
        )));
    }
    let header_bytes: usize = parse_num(&bytes[184..192], "header size")?;
    let mut num_records: i64 = parse_num(&bytes[236..244], "record count")?;
    let record_duration_s: f64 = parse_num(&bytes[244..252], "record duration")?;
    let ns: usize = parse_num(&bytes[252..256], "signal count")?;
    if ns == 0 {
        return Err(Error::data("edf header: zero signals".to_string()));
    }
    if header_bytes != 256 * (ns + 1) {
        return Err(Error::data(format!(
            "edf header: header size {header_bytes} does not match {ns} signals"
        )));
    }
    if bytes.len() < header_bytes {
        return Err(Error::data(format!(
            "{}: truncated signal headers",
            path.display()
        )));
    }

    // Signal headers are field-major.
    let sh = &bytes[256..header_bytes];
    let field = |offset: usize, width: usize, idx: usize| -> &[u8] {
        &sh[offset * ns + idx * width..offset * ns + (idx + 1) * width]
    };
    // Field byte offsets within one signal header column.
    const LABEL: usize = 0;
    const PHYS_DIM: usize = 96; // 16 label + 80 transducer
    const PHYS_MIN: usize = 104;
    const PHYS_MAX: usize = 112;
    const DIG_MIN: usize = 120;
    const DIG_MAX: usize = 128;
    const SPR: usize = 216; // after 80 prefiltering

    struct SignalMeta {
        label: String,
        phys_dim: String,
        phys_min: f64,
        phys_max: f64,
        dig_min: f64,
        dig_max: f64,
        spr: usize,
    }
    let mut metas = Vec::with_capacity(ns);
    for i in 0..ns {
        let meta = SignalMeta {
            label: ascii(field(LABEL, 16, i)),
            phys_dim: ascii(field(PHYS_DIM, 8, i)),
            phys_min: parse_num(field(PHYS_MIN, 8, i), "physical minimum")?,
            phys_max: parse_num(field(PHYS_MAX, 8, i), "physical maximum")?,
            dig_min: parse_num(field(DIG_MIN, 8, i), "digital minimum")?,
            dig_max: parse_num(field(DIG_MAX, 8, i), "digital maximum")?,
            spr: parse_num(field(SPR, 8, i), "samples per record")?,
        };
        if meta.dig_max <= meta.dig_min {
            return Err(Error::data(format!(
                "edf signal '{}': empty digital range [{}, {}]",
                meta.label, meta.dig_min, meta.dig_max
            )));
        }
        if meta.spr == 0 {
            return Err(Error::data(format!(
                "edf signal '{}': zero samples per record",
                meta.label
            )));
        }
        metas.push(meta);
    }

    let record_size: usize = metas.iter().map(|m| m.spr * 2).sum();
    let payload = bytes.len() - header_bytes;
    if num_records < 0 {
        // Unknown record count (-1): infer from the file size.
        num_records = (payload / record_size) as i64;
    }
    let num_records = num_records as usize;
    if payload < num_records * record_size {
        return Err(Error::data(format!(
            "{}: data section holds {} bytes, expected {} for {} records",
            path.display(),
            payload,
            num_records * record_size,
            num_records
        )));
    }

    let mut signals: Vec<EdfSignal> = metas
        .iter()
        .map(|m| EdfSignal {
            label: m.label.clone(),
            physical_dimension: m.phys_dim.clone(),
            samples_per_record: m.spr,
            samples: Vec::with_capacity(num_records * m.spr),
        })
        .collect();

    let mut off = header_bytes;
    for _ in 0..num_records {
        for (sig, meta) in signals.iter_mut().zip(&metas) {
            let gain = (meta.phys_max - meta.phys_min) / (meta.dig_max - meta.dig_min);
            for _ in 0..meta.spr {
                let d = i16::from_le_bytes([bytes[off], bytes[off + 1]]) as f64;
                sig.samples.push((d - meta.dig_min) * gain + meta.phys_min);
                off += 2;
            }
        }
    }

    Ok(EdfFile {
        record_duration_s,
        num_records,
        signals,
    })
}

/// Formats a number into EDF's 8-character ASCII numeric field.
fn fmt_field8(v: f64) -> Result<String> {
    for precision in (0..=6).rev() {
        let s = format!("{v:.precision$}");
        if s.len() <= 8 {
            return Ok(s);
        }
    }
    let s = format!("{v:.1e}");
    if s.len() <= 8 {
        return Ok(s);
    }
    Err(Error::data(format!(
        "value {v} cannot be encoded in an 8-character edf field"
    )))
}

fn pad(s: &str, width: usize) -> Result<Vec<u8>> {
    let cleaned: String = s
        .chars()
        .map(|c| if c.is_ascii_graphic() || c == ' ' { c } else { '_' })
        .collect();
    if cleaned.len() > width {
        return Err(Error::data(format!(
            "edf field '{s}' exceeds {width} characters"
        )));
    }
    let mut out = cleaned.into_bytes();
    out.resize(width, b' ');
    Ok(out)
}

/// Writes a recording as an EDF file with one-second records.
///
/// The sample rate must be a positive integer and the sample count a
/// multiple of it. Output is deterministic: the start date/time fields are
/// fixed placeholders, not wall-clock values.
pub fn write_edf(path: &Path, rec: &RawRecording) -> Result<()> {
    rec.validate()?;
    let (n, c) = rec.samples.dims2()?;
    let spr = rec.sample_rate_hz as usize;
    if spr == 0 || (spr as f64 - rec.sample_rate_hz).abs() > 1e-9 {
        return Err(Error::data(format!(
            "edf writer requires an integer sample rate, got {}",
            rec.sample_rate_hz
        )));
    }
    if n % spr != 0 || n == 0 {
        return Err(Error::data(format!(
            "edf writer: {n} samples is not a whole number of 1-second records at {spr} Hz"
        )));
    }
    let num_records = n / spr;

    // Physical range per channel, widened when constant, then re-parsed from
    // the printed fields so calibration matches what a reader will see.
    let data = rec.samples.data();
    let mut ranges = Vec::with_capacity(c);
    for ch in 0..c {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for row in 0..n {
            let v = data[row * c + ch];
            lo = lo.min(v);
            hi = hi.max(v);
        }
        let (data_lo, data_hi) = (lo, hi);
        // Pad the range so that the 8-character decimal rendering, whose
        // round-trip error is far below this margin, still brackets the data.
        let mut margin = 1e-5 * lo.abs().max(hi.abs()).max(1.0);
        loop {
            let lo = data_lo - margin;
            let hi = data_hi + margin;
            let lo_s = fmt_field8(lo)?;
            let hi_s = fmt_field8(hi)?;
            let lo_p: f64 = lo_s.parse().expect("printed by fmt_field8");
            let hi_p: f64 = hi_s.parse().expect("printed by fmt_field8");
            if hi_p > lo_p && lo_p <= data_lo && hi_p >= data_hi {
                ranges.push((lo_s, hi_s, lo_p, hi_p));
                break;
            }
            margin = margin * 2.0 + 1.0;
        }
    }

    const DIG_MIN: f64 = -32768.0;
    const DIG_MAX: f64 = 32767.0;

    let mut header = Vec::with_capacity(256 * (c + 1));
    header.extend(pad("0", 8)?); // version
    header.extend(pad(&rec.subject_id, 80)?); // patient identification
    header.extend(pad("Startdate 01-JAN-2000", 80)?); // recording identification
    header.extend(pad("01.01.00", 8)?); // start date (fixed placeholder)
    header.extend(pad("00.00.00", 8)?); // start time (fixed placeholder)
    header.extend(pad(&format!("{}", 256 * (c + 1)), 8)?);
    header.extend(pad("", 44)?); // reserved
    header.extend(pad(&format!("{num_records}"), 8)?);
    header.extend(pad("1", 8)?); // record duration, seconds
    header.extend(pad(&format!("{c}"), 4)?);

    // Field-major signal headers.
    for ch in 0..c {
        header.extend(pad(&rec.channel_names[ch], 16)?);
    }
    for _ in 0..c {
        header.extend(pad("", 80)?); // transducer type
    }
    for _ in 0..c {
        header.extend(pad("uV", 8)?);
    }
    for r in &ranges {
        header.extend(pad(&r.0, 8)?);
    }
    for r in &ranges {
        header.extend(pad(&r.1, 8)?);
    }
    for _ in 0..c {
        header.extend(pad("-32768", 8)?);
    }
    for _ in 0..c {
        header.extend(pad("32767", 8)?);
    }
    for _ in 0..c {
        header.extend(pad("", 80)?); // prefiltering
    }
    for _ in 0..c {
        header.extend(pad(&format!("{spr}"), 8)?);
    }
    for _ in 0..c {
        header.extend(pad("", 32)?); // reserved
    }
    debug_assert_eq!(header.len(), 256 * (c + 1));

    let mut body = Vec::with_capacity(num_records * spr * c * 2);
    for record in 0..num_records {
        for (ch, range) in ranges.iter().enumerate() {
            let (_, _, lo, hi) = range;
            let gain = (hi - lo) / (DIG_MAX - DIG_MIN);
            for s in 0..spr {
                let v = data[(record * spr + s) * c + ch];
                let d = ((v - lo) / gain + DIG_MIN).round().clamp(DIG_MIN, DIG_MAX) as i16;
                body.extend_from_slice(&d.to_le_bytes());
            }
        }
    }

    let mut file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(&header).map_err(|e| Error::io(path, e))?;
    file.write_all(&body).map_err(|e| Error::io(path, e))?;
    Ok(())
}
