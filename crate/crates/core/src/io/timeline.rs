//! Binary timeline CSV: `# step_s=<v>` plus `time_s,label` rows, or
//! `time_s,score,label` when per-step scores are available. Labels are 0/1
//! with 1 = positive (apnea).

use super::{parse_f64, read_commented_csv, IoError};
use crate::eval::LabeledTimeline;
use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

pub struct TimelineFile {
    pub timeline: LabeledTimeline,
    pub scores: Option<Vec<f64>>,
    pub comments: BTreeMap<String, String>,
}

pub fn write_timeline_csv(
    path: &Path,
    timeline: &LabeledTimeline,
    scores: Option<&[f64]>,
    comments: &[(&str, String)],
) -> Result<(), IoError> {
    if let Some(scores) = scores {
        assert_eq!(scores.len(), timeline.len(), "score/label length mismatch");
    }
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "# step_s={}", timeline.step_s())?;
    for (key, value) in comments {
        writeln!(out, "# {key}={value}")?;
    }
    let step = timeline.step_s();
    match scores {
        Some(scores) => {
            writeln!(out, "time_s,score,label")?;
            for (j, (&label, &score)) in timeline.labels().iter().zip(scores).enumerate() {
                writeln!(out, "{},{},{}", j as f64 * step, score, u8::from(label))?;
            }
        }
        None => {
            writeln!(out, "time_s,label")?;
            for (j, &label) in timeline.labels().iter().enumerate() {
                writeln!(out, "{},{}", j as f64 * step, u8::from(label))?;
            }
        }
    }
    Ok(())
}

pub fn read_timeline_csv(path: &Path) -> Result<TimelineFile, IoError> {
    let csv = read_commented_csv(path)?;
    if csv.rows.is_empty() {
        return Err(IoError::format(path, "no timeline steps"));
    }
    let with_scores = csv
        .header
        .as_ref()
        .map(|(_, h)| h.split(',').count() >= 3)
        .unwrap_or_else(|| csv.rows[0].1.split(',').count() >= 3);

    let mut times = Vec::with_capacity(csv.rows.len());
    let mut labels = Vec::with_capacity(csv.rows.len());
    let mut scores = with_scores.then(Vec::new);
    for (line, row) in &csv.rows {
        let fields: Vec<&str> = row.split(',').collect();
        let expected = if with_scores { 3 } else { 2 };
        if fields.len() != expected {
            return Err(IoError::parse(
                path,
                *line,
                format!("expected {expected} fields, got {}", fields.len()),
            ));
        }
        times.push(parse_f64(path, *line, fields[0], "time_s")?);
        if let Some(scores) = scores.as_mut() {
            scores.push(parse_f64(path, *line, fields[1], "score")?);
        }
        let label_field = fields[if with_scores { 2 } else { 1 }].trim();
        labels.push(match label_field {
            "0" => false,
            "1" => true,
            other => {
                return Err(IoError::parse(
                    path,
                    *line,
                    format!("label must be 0 or 1, got {other:?}"),
                ))
            }
        });
    }

    let step_s = match csv.comments.get("step_s") {
        Some(v) => v
            .parse::<f64>()
            .map_err(|_| IoError::format(path, format!("bad step_s comment {v:?}")))?,
        None if times.len() >= 2 => (times[times.len() - 1] - times[0]) / (times.len() - 1) as f64,
        None => {
            return Err(IoError::format(
                path,
                "single-row timeline requires a '# step_s=<value>' comment",
            ))
        }
    };
    let timeline =
        LabeledTimeline::new(step_s, labels).map_err(|e| IoError::format(path, e.to_string()))?;
    Ok(TimelineFile {
        timeline,
        scores,
        comments: csv.comments,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_with_scores() {
        let timeline = LabeledTimeline::new(0.5, vec![false, true, true, false]).unwrap();
        let scores = vec![100.0, 0.25, 0.5, 80.0];
        let dir = std::env::temp_dir().join("respiro-io-tests");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("timeline_roundtrip.csv");
        write_timeline_csv(
            &path,
            &timeline,
            Some(&scores),
            &[("window_s", "10".into())],
        )
        .unwrap();
        let back = read_timeline_csv(&path).unwrap();
        assert_eq!(back.timeline, timeline);
        assert_eq!(back.scores.unwrap(), scores);
        assert_eq!(back.comments.get("window_s").unwrap(), "10");

        write_timeline_csv(&path, &timeline, None, &[]).unwrap();
        let back = read_timeline_csv(&path).unwrap();
        assert_eq!(back.timeline, timeline);
        assert!(back.scores.is_none());
    }
}
