//! Sojourn schedule CSV, also the export format consumed by the servo-driven
//! hardware rig: `state_index,rate_hz,sojourn_s,jump_time_s` rows plus a
//! `# seed=<value>` comment when the schedule came from a seeded simulation.

use super::{parse_f64, read_commented_csv, IoError};
use crate::ctmc::{SojournEntry, SojournSchedule};
use crate::quantizer::StateSpace;
use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

pub struct ScheduleFile {
    pub schedule: SojournSchedule,
    /// Rate column as stored, one value per entry.
    pub rates_hz: Vec<f64>,
    pub comments: BTreeMap<String, String>,
}

pub fn write_schedule_csv(
    path: &Path,
    schedule: &SojournSchedule,
    ss: &StateSpace,
    comments: &[(&str, String)],
) -> Result<(), IoError> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    if let Some(seed) = schedule.seed() {
        writeln!(out, "# seed={seed}")?;
    }
    for (key, value) in comments {
        writeln!(out, "# {key}={value}")?;
    }
    writeln!(out, "state_index,rate_hz,sojourn_s,jump_time_s")?;
    let mut jump = 0.0f64;
    for entry in schedule.entries() {
        jump += entry.sojourn_s;
        writeln!(
            out,
            "{},{},{},{}",
            entry.state,
            ss.rate(entry.state),
            entry.sojourn_s,
            jump
        )?;
    }
    Ok(())
}

pub fn read_schedule_csv(path: &Path) -> Result<ScheduleFile, IoError> {
    let csv = read_commented_csv(path)?;
    if csv.rows.is_empty() {
        return Err(IoError::format(path, "no schedule entries"));
    }
    let seed = csv
        .comments
        .get("seed")
        .map(|v| {
            v.parse::<u64>()
                .map_err(|_| IoError::format(path, format!("bad seed comment {v:?}")))
        })
        .transpose()?;

    let mut entries = Vec::with_capacity(csv.rows.len());
    let mut rates_hz = Vec::with_capacity(csv.rows.len());
    let mut expected_jump = 0.0f64;
    for (line, row) in &csv.rows {
        let fields: Vec<&str> = row.split(',').collect();
        if fields.len() != 4 {
            return Err(IoError::parse(
                path,
                *line,
                format!("expected 4 fields, got {}", fields.len()),
            ));
        }
        let state: usize = fields[0]
            .trim()
            .parse()
            .map_err(|_| IoError::parse(path, *line, format!("bad state index {:?}", fields[0])))?;
        let rate = parse_f64(path, *line, fields[1], "rate_hz")?;
        let sojourn = parse_f64(path, *line, fields[2], "sojourn_s")?;
        let jump = parse_f64(path, *line, fields[3], "jump_time_s")?;
        expected_jump += sojourn;
        if ((jump - expected_jump) / expected_jump.max(1e-12)).abs() > 1e-9 {
            return Err(IoError::parse(
                path,
                *line,
                format!("jump time {jump} inconsistent with sojourn sum {expected_jump}"),
            ));
        }
        entries.push(SojournEntry {
            state,
            sojourn_s: sojourn,
        });
        rates_hz.push(rate);
    }
    let schedule = SojournSchedule::from_entries(entries, seed)
        .map_err(|e| IoError::format(path, e.to_string()))?;
    Ok(ScheduleFile {
        schedule,
        rates_hz,
        comments: csv.comments,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::RateBounds;

    #[test]
    fn round_trip() {
        let ss = StateSpace::new(vec![0.0, 0.9], true, false, RateBounds::newborn()).unwrap();
        let schedule = SojournSchedule::from_entries(
            vec![
                SojournEntry {
                    state: 1,
                    sojourn_s: 12.25,
                },
                SojournEntry {
                    state: 0,
                    sojourn_s: 3.5,
                },
                SojournEntry {
                    state: 1,
                    sojourn_s: 0.125,
                },
            ],
            Some(99),
        )
        .unwrap();
        let dir = std::env::temp_dir().join("respiro-io-tests");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("schedule_roundtrip.csv");
        write_schedule_csv(&path, &schedule, &ss, &[("model", "m.json".into())]).unwrap();
        let back = read_schedule_csv(&path).unwrap();
        assert_eq!(back.schedule, schedule);
        assert_eq!(back.rates_hz, vec![0.9, 0.0, 0.9]);
        assert_eq!(back.schedule.seed(), Some(99));
    }
}
