//! CSV signal I/O.
//!
//! Layout: one header row of channel names, then one row per sample with one
//! numeric column per channel. Values are written with Rust's shortest
//! round-trip float rendering, so a write/read cycle reproduces every `f64`
//! bit-for-bit.

use std::path::Path;

use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Reads a signal table; returns the header names and a `[samples, channels]`
/// tensor.
pub fn load_csv(path: &Path) -> Result<(Vec<String>, Tensor)> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            other => Error::data(format!("{}: {other:?}", path.display())),
        })?;

    let names: Vec<String> = reader
        .headers()
        .map_err(|e| Error::data(format!("{}: bad header row: {e}", path.display())))?
        .iter()
        .map(str::to_string)
        .collect();
    if names.is_empty() || names.iter().all(|n| n.is_empty()) {
        return Err(Error::data(format!(
            "{}: missing channel-name header row",
            path.display()
        )));
    }
    let c = names.len();

    let mut data = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 2; // 1-based, counting the header line
        let record = record.map_err(|e| {
            Error::data(format!("{}: row {row}: {e}", path.display()))
        })?;
        if record.len() != c {
            return Err(Error::data(format!(
                "{}: row {row} has {} columns, header has {c}",
                path.display(),
                record.len()
            )));
        }
        for (j, cell) in record.iter().enumerate() {
            let v: f64 = cell.parse().map_err(|_| {
                Error::data(format!(
                    "{}: row {row}, column {} ('{}'): not a number: '{cell}'",
                    path.display(),
                    j + 1,
                    names[j]
                ))
            })?;
            data.push(v);
        }
    }
    let n = data.len() / c;
    Ok((names, Tensor::from_shape_vec(&[n, c], data)?))
}

/// Writes a `[samples, channels]` tensor with a channel-name header row.
pub fn write_csv(path: &Path, channel_names: &[String], samples: &Tensor) -> Result<()> {
    let (n, c) = samples.dims2()?;
    if channel_names.len() != c {
        return Err(Error::shape(format!(
            "csv writer: {} channel names for {c} data columns",
            channel_names.len()
        )));
    }
    let mut writer = csv::Writer::from_path(path).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::data(format!("{}: {other:?}", path.display())),
    })?;
    writer
        .write_record(channel_names)
        .map_err(|e| Error::data(format!("{}: {e}", path.display())))?;
    let data = samples.data();
    let mut row_buf: Vec<String> = Vec::with_capacity(c);
    for row in 0..n {
        row_buf.clear();
        for col in 0..c {
            row_buf.push(format!("{}", data[row * c + col]));
        }
        writer
            .write_record(&row_buf)
            .map_err(|e| Error::data(format!("{}: {e}", path.display())))?;
    }
    writer
        .flush()
        .map_err(|e| Error::io(path, e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sig.csv");
        let names = vec!["Fp1".to_string(), "Fp2".to_string()];
        let values = vec![
            0.1,
            -0.0,
            std::f64::consts::PI,
            1e-300,
            -4.9e15,
            2.2250738585072014e-308,
            123.456789012345678,
            -1.0 / 3.0,
        ];
        let t = Tensor::from_shape_vec(&[4, 2], values.clone()).unwrap();
        write_csv(&path, &names, &t).unwrap();
        let (back_names, back) = load_csv(&path).unwrap();
        assert_eq!(back_names, names);
        assert_eq!(back.shape(), &[4, 2]);
        for (a, b) in back.data().iter().zip(&values) {
            assert_eq!(a.to_bits(), b.to_bits(), "{a} vs {b}");
        }
    }

    #[test]
    fn reports_row_and_column_for_bad_cells() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        std::fs::write(&path, "Fp1,Fp2\n1.0,2.0\n3.0,oops\n").unwrap();
        let err = load_csv(&path).unwrap_err().to_string();
        assert!(err.contains("row 3"), "{err}");
        assert!(err.contains("Fp2"), "{err}");
        assert!(err.contains("oops"), "{err}");
    }

    #[test]
    fn rejects_ragged_rows() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ragged.csv");
        std::fs::write(&path, "Fp1,Fp2\n1.0,2.0\n3.0\n").unwrap();
        let err = load_csv(&path).unwrap_err().to_string();
        assert!(err.contains("row 3"), "{err}");
    }

    #[test]
    fn missing_file_maps_to_io_error() {
        let err = load_csv(Path::new("/nonexistent/never.csv")).unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
    }

    #[test]
    fn header_only_file_yields_zero_rows() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("empty.csv");
        std::fs::write(&path, "Fp1,Fp2,F7\n").unwrap();
        let (names, t) = load_csv(&path).unwrap();
        assert_eq!(names.len(), 3);
        assert_eq!(t.shape(), &[0, 3]);
    }
}
