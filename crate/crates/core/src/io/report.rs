//! Evaluation report JSON (metrics keyed by name, with units) and ROC CSV.

use super::IoError;
use crate::eval::RocAnalysis;
use serde::Serialize;
use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

#[derive(Debug, Clone, Serialize)]
pub struct MetricValue {
    /// None marks a metric whose denominator vanished (serialized as null).
    pub value: Option<f64>,
    pub unit: &'static str,
}

impl MetricValue {
    pub fn new(value: impl Into<Option<f64>>, unit: &'static str) -> Self {
        Self {
            value: value.into(),
            unit,
        }
    }
}

/// Report with deterministic key order (BTreeMap keys serialize sorted).
#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub kind: String,
    pub config: BTreeMap<String, String>,
    pub metrics: BTreeMap<String, MetricValue>,
}

impl Report {
    pub fn new(kind: impl Into<String>) -> Self {
        Self {
            kind: kind.into(),
            config: BTreeMap::new(),
            metrics: BTreeMap::new(),
        }
    }

    pub fn with_metric(mut self, name: &str, value: MetricValue) -> Self {
        self.metrics.insert(name.to_string(), value);
        self
    }
}

pub fn write_report(path: &Path, report: &Report) -> Result<(), IoError> {
    let json = serde_json::to_string_pretty(report).expect("report serialization cannot fail");
    std::fs::write(path, json + "\n")?;
    Ok(())
}

/// ROC curve CSV: `threshold,fpr,tpr` rows in sweep order.
pub fn write_roc_csv(path: &Path, analysis: &RocAnalysis) -> Result<(), IoError> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "threshold,fpr,tpr")?;
    for p in &analysis.points {
        writeln!(
            out,
            "{},{},{}",
            p.threshold, p.false_positive_rate, p.true_positive_rate
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::RocPoint;

    #[test]
    fn report_serializes_null_for_undefined_metrics() {
        let report = Report::new("detection")
            .with_metric("sensitivity", MetricValue::new(0.9, "fraction"))
            .with_metric("dor", MetricValue::new(None, "ratio"));
        let json = serde_json::to_string(&report).unwrap();
        assert!(json.contains("\"value\":null"));
        assert!(json.contains("\"sensitivity\""));
    }

    #[test]
    fn roc_csv_layout() {
        let analysis = RocAnalysis {
            points: vec![RocPoint {
                threshold: 0.5,
                false_positive_rate: 0.125,
                true_positive_rate: 1.0,
            }],
            auc: 1.0,
            optimal: RocPoint {
                threshold: 0.5,
                false_positive_rate: 0.125,
                true_positive_rate: 1.0,
            },
        };
        let dir = std::env::temp_dir().join("respiro-io-tests");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("roc.csv");
        write_roc_csv(&path, &analysis).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text, "threshold,fpr,tpr\n0.5,0.125,1\n");
    }
}
