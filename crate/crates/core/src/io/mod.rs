//! File formats: pneumogram/trajectory/schedule/timeline CSV, model JSON,
//! raw frame tensors, PMF lists, report JSON and ROC CSV.
//!
//! CSV files carry their metadata as `# key=value` comment lines before the
//! header row. All numeric output uses the shortest round-trip decimal
//! representation, so write-then-read is lossless at full binary precision.

mod fseq;
mod model;
mod pmf;
mod pneumo;
mod report;
mod schedule;
mod timeline;
mod trajectory;

pub use fseq::{read_fseq, write_fseq};
pub use model::{ModelFile, ModelMeta};
pub use pmf::read_pmf;
pub use pneumo::{read_pneumogram_csv, write_pneumogram_csv};
pub use report::{write_report, write_roc_csv, MetricValue, Report};
pub use schedule::{read_schedule_csv, write_schedule_csv, ScheduleFile};
pub use timeline::{read_timeline_csv, write_timeline_csv, TimelineFile};
pub use trajectory::{read_trajectory_csv, write_trajectory_csv, TrajectoryFile};

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IoError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },
    #[error("{path}: {message}")]
    Format { path: String, message: String },
}

impl IoError {
    fn parse(path: &Path, line: usize, message: impl Into<String>) -> Self {
        IoError::Parse {
            path: path.display().to_string(),
            line,
            message: message.into(),
        }
    }

    fn format(path: &Path, message: impl Into<String>) -> Self {
        IoError::Format {
            path: path.display().to_string(),
            message: message.into(),
        }
    }
}

/// A CSV-ish text file split into `# key=value` comments, a header line and
/// data lines (1-based line numbers retained for error reporting).
struct CommentedCsv {
    comments: BTreeMap<String, String>,
    header: Option<(usize, String)>,
    rows: Vec<(usize, String)>,
}

fn read_commented_csv(path: &Path) -> Result<CommentedCsv, IoError> {
    let file = std::fs::File::open(path)?;
    let reader = BufReader::new(file);
    let mut comments = BTreeMap::new();
    let mut header = None;
    let mut rows = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let number = idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(comment) = trimmed.strip_prefix('#') {
            if let Some((key, value)) = comment.split_once('=') {
                comments.insert(key.trim().to_string(), value.trim().to_string());
            }
            continue;
        }
        if header.is_none() && trimmed.chars().next().is_some_and(|c| c.is_alphabetic()) {
            header = Some((number, trimmed.to_string()));
        } else {
            rows.push((number, trimmed.to_string()));
        }
    }
    Ok(CommentedCsv {
        comments,
        header,
        rows,
    })
}

fn parse_f64(path: &Path, line: usize, field: &str, what: &str) -> Result<f64, IoError> {
    field
        .trim()
        .parse::<f64>()
        .map_err(|_| IoError::parse(path, line, format!("cannot parse {what} from {field:?}")))
}

fn read_to_string(path: &Path) -> Result<String, IoError> {
    let mut buf = String::new();
    std::fs::File::open(path)?.read_to_string(&mut buf)?;
    Ok(buf)
}
