//! RR trajectory CSV: `# key=value` metadata (at least `step_s`), then
//! `time_s,rr_hz` rows.

use super::{parse_f64, read_commented_csv, IoError};
use crate::signal::RrTrajectory;
use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

pub struct TrajectoryFile {
    pub trajectory: RrTrajectory,
    pub comments: BTreeMap<String, String>,
}

pub fn write_trajectory_csv(
    path: &Path,
    trajectory: &RrTrajectory,
    comments: &[(&str, String)],
) -> Result<(), IoError> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "# step_s={}", trajectory.step_s)?;
    writeln!(out, "# origin_s={}", trajectory.origin_s)?;
    for (key, value) in comments {
        writeln!(out, "# {key}={value}")?;
    }
    writeln!(out, "time_s,rr_hz")?;
    for (j, v) in trajectory.values_hz.iter().enumerate() {
        writeln!(
            out,
            "{},{}",
            trajectory.origin_s + j as f64 * trajectory.step_s,
            v
        )?;
    }
    Ok(())
}

pub fn read_trajectory_csv(path: &Path) -> Result<TrajectoryFile, IoError> {
    let csv = read_commented_csv(path)?;
    if csv.rows.is_empty() {
        return Err(IoError::format(path, "no trajectory values"));
    }
    let mut times = Vec::with_capacity(csv.rows.len());
    let mut values_hz = Vec::with_capacity(csv.rows.len());
    for (line, row) in &csv.rows {
        let mut fields = row.split(',');
        let t = fields
            .next()
            .ok_or_else(|| IoError::parse(path, *line, "missing time field"))?;
        let v = fields
            .next()
            .ok_or_else(|| IoError::parse(path, *line, "missing rr_hz field"))?;
        times.push(parse_f64(path, *line, t, "time_s")?);
        values_hz.push(parse_f64(path, *line, v, "rr_hz")?);
    }

    let step_s = match csv.comments.get("step_s") {
        Some(v) => v
            .parse::<f64>()
            .map_err(|_| IoError::format(path, format!("bad step_s comment {v:?}")))?,
        None if times.len() >= 2 => (times[times.len() - 1] - times[0]) / (times.len() - 1) as f64,
        None => {
            return Err(IoError::format(
                path,
                "single-row trajectory requires a '# step_s=<value>' comment",
            ))
        }
    };
    if !(step_s.is_finite() && step_s > 0.0) {
        return Err(IoError::format(path, format!("invalid step {step_s} s")));
    }
    let origin_s = match csv.comments.get("origin_s") {
        Some(v) => v
            .parse::<f64>()
            .map_err(|_| IoError::format(path, format!("bad origin_s comment {v:?}")))?,
        None => times[0],
    };

    Ok(TrajectoryFile {
        trajectory: RrTrajectory {
            values_hz,
            step_s,
            origin_s,
        },
        comments: csv.comments,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_preserves_values_exactly() {
        let dir = std::env::temp_dir().join("respiro-io-tests");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("traj_roundtrip.csv");
        let traj = RrTrajectory {
            values_hz: vec![0.9, 0.0, 1.3333333333333333, 15.0, 0.4 + 1e-13],
            step_s: 0.5,
            origin_s: 0.0,
        };
        write_trajectory_csv(&path, &traj, &[("r_low_hz", "0.4".into())]).unwrap();
        let back = read_trajectory_csv(&path).unwrap();
        assert_eq!(back.trajectory.values_hz, traj.values_hz);
        assert_eq!(back.trajectory.step_s, traj.step_s);
        assert_eq!(back.comments.get("r_low_hz").unwrap(), "0.4");
    }
}
