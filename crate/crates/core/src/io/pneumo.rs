//! Pneumogram CSV.
//!
//! Two accepted layouts:
//!
//! * `time_s,value_uV` rows in strictly increasing uniform time; the sample
//!   rate is inferred from the time column and uniformity is validated to a
//!   relative tolerance of 1e-6;
//! * a single `value_uV` column with the rate given as a `# fs_hz=<value>`
//!   comment.

use super::{parse_f64, read_commented_csv, IoError};
use crate::signal::PneumogramRecord;
use std::io::Write;
use std::path::Path;

const UNIFORMITY_REL_TOL: f64 = 1e-6;

pub fn read_pneumogram_csv(path: &Path) -> Result<PneumogramRecord, IoError> {
    let csv = read_commented_csv(path)?;
    if csv.rows.is_empty() {
        return Err(IoError::format(path, "no samples (empty file?)"));
    }

    let fs_comment = csv
        .comments
        .get("fs_hz")
        .map(|v| {
            v.parse::<f64>()
                .map_err(|_| IoError::format(path, format!("bad fs_hz comment {v:?}")))
        })
        .transpose()?;

    let two_column = csv
        .header
        .as_ref()
        .map(|(_, h)| h.split(',').count() >= 2)
        .unwrap_or_else(|| csv.rows[0].1.split(',').count() >= 2);

    if two_column {
        let mut times = Vec::with_capacity(csv.rows.len());
        let mut values = Vec::with_capacity(csv.rows.len());
        for (line, row) in &csv.rows {
            let mut fields = row.split(',');
            let t = fields
                .next()
                .ok_or_else(|| IoError::parse(path, *line, "missing time field"))?;
            let v = fields
                .next()
                .ok_or_else(|| IoError::parse(path, *line, "missing value field"))?;
            times.push(parse_f64(path, *line, t, "time_s")?);
            values.push(parse_f64(path, *line, v, "value_uV")?);
        }
        if times.len() < 2 {
            return Err(IoError::format(path, "need at least 2 samples"));
        }
        let span = times[times.len() - 1] - times[0];
        let dt = span / (times.len() - 1) as f64;
        if !(dt.is_finite() && dt > 0.0) {
            return Err(IoError::format(path, "time column is not increasing"));
        }
        for (i, pair) in times.windows(2).enumerate() {
            let step = pair[1] - pair[0];
            if step <= 0.0 {
                return Err(IoError::parse(
                    path,
                    csv.rows[i + 1].0,
                    "time must be strictly increasing",
                ));
            }
            if ((step - dt) / dt).abs() > UNIFORMITY_REL_TOL {
                return Err(IoError::parse(
                    path,
                    csv.rows[i + 1].0,
                    format!("non-uniform sampling: step {step} s vs mean {dt} s"),
                ));
            }
        }
        PneumogramRecord::new(values, 1.0 / dt).map_err(|e| IoError::format(path, e.to_string()))
    } else {
        let fs = fs_comment.ok_or_else(|| {
            IoError::format(
                path,
                "single-column format requires a '# fs_hz=<value>' comment",
            )
        })?;
        let mut values = Vec::with_capacity(csv.rows.len());
        for (line, row) in &csv.rows {
            values.push(parse_f64(path, *line, row, "value_uV")?);
        }
        PneumogramRecord::new(values, fs).map_err(|e| IoError::format(path, e.to_string()))
    }
}

/// Write the two-column layout, with any extra `# key=value` comments first.
pub fn write_pneumogram_csv(
    path: &Path,
    record: &PneumogramRecord,
    comments: &[(&str, String)],
) -> Result<(), IoError> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "# fs_hz={}", record.sample_rate_hz())?;
    for (key, value) in comments {
        writeln!(out, "# {key}={value}")?;
    }
    writeln!(out, "time_s,value_uV")?;
    let fs = record.sample_rate_hz();
    for (i, v) in record.samples().iter().enumerate() {
        writeln!(out, "{},{}", i as f64 / fs, v)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::path::PathBuf;

    fn scratch(name: &str) -> PathBuf {
        let dir = std::env::temp_dir().join("respiro-io-tests");
        std::fs::create_dir_all(&dir).unwrap();
        dir.join(name)
    }

    #[test]
    fn round_trip_two_column() {
        let record =
            PneumogramRecord::new((0..64).map(|i| (i as f64).sin() * 100.0).collect(), 32.0)
                .unwrap();
        let path = scratch("pneumo_roundtrip.csv");
        write_pneumogram_csv(&path, &record, &[("source", "test".into())]).unwrap();
        let back = read_pneumogram_csv(&path).unwrap();
        assert_eq!(back.samples(), record.samples());
        assert!((back.sample_rate_hz() - 32.0).abs() < 1e-9);
    }

    #[test]
    fn single_column_with_rate_comment() {
        let path = scratch("pneumo_single.csv");
        std::fs::write(&path, "# fs_hz=16\nvalue_uV\n1.5\n-2.5\n3.5\n").unwrap();
        let record = read_pneumogram_csv(&path).unwrap();
        assert_eq!(record.samples(), &[1.5, -2.5, 3.5]);
        assert_eq!(record.sample_rate_hz(), 16.0);
    }

    #[test]
    fn malformed_row_reports_line_number() {
        let path = scratch("pneumo_bad.csv");
        std::fs::write(&path, "time_s,value_uV\n0,1\n0.03125,oops\n").unwrap();
        match read_pneumogram_csv(&path) {
            Err(IoError::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn non_uniform_time_rejected() {
        let path = scratch("pneumo_nonuniform.csv");
        std::fs::write(&path, "time_s,value_uV\n0,1\n1,2\n2.5,3\n3.5,4\n").unwrap();
        assert!(matches!(
            read_pneumogram_csv(&path),
            Err(IoError::Parse { .. })
        ));
    }

    #[test]
    fn empty_file_rejected() {
        let path = scratch("pneumo_empty.csv");
        std::fs::write(&path, "").unwrap();
        assert!(matches!(
            read_pneumogram_csv(&path),
            Err(IoError::Format { .. })
        ));
    }
}
