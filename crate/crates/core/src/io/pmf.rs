//! PMF text format: one probability per line, `#` comments allowed.

use super::{parse_f64, read_commented_csv, IoError};
use std::path::Path;

pub fn read_pmf(path: &Path) -> Result<Vec<f64>, IoError> {
    let csv = read_commented_csv(path)?;
    if csv.rows.is_empty() {
        return Err(IoError::format(path, "no probability masses"));
    }
    let mut probs = Vec::with_capacity(csv.rows.len());
    for (line, row) in &csv.rows {
        // accept an optional leading index column
        let field = row.rsplit(',').next().unwrap_or(row);
        probs.push(parse_f64(path, *line, field, "probability")?);
    }
    Ok(probs)
}
