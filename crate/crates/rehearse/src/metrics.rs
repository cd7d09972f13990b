//! Metrics CSV: one row per evaluation point.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Deserialize;

use rehearse_core::training::MetricsRecord;

use crate::error::{HarnessError, Result};

pub const HEADER: [&str; 7] = [
    "step",
    "train_acc",
    "test_acc",
    "rehearsed_mean",
    "rehearsed_min",
    "rehearsed_max",
    "fit_steps_total",
];

/// A parsed CSV row.
#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct MetricsRow {
    pub step: usize,
    pub train_acc: f64,
    pub test_acc: f64,
    pub rehearsed_mean: f64,
    pub rehearsed_min: usize,
    pub rehearsed_max: usize,
    pub fit_steps_total: usize,
}

impl MetricsRow {
    pub fn from_record(r: &MetricsRecord) -> Self {
        Self {
            step: r.step,
            train_acc: r.train_acc,
            test_acc: r.test_acc,
            rehearsed_mean: r.rehearsed_mean(),
            rehearsed_min: r.rehearsed_min(),
            rehearsed_max: r.rehearsed_max(),
            fit_steps_total: r.fit_steps_total(),
        }
    }

    /// Value of a numeric column by header name.
    pub fn column(&self, name: &str) -> Option<f64> {
        Some(match name {
            "step" => self.step as f64,
            "train_acc" => self.train_acc,
            "test_acc" => self.test_acc,
            "rehearsed_mean" => self.rehearsed_mean,
            "rehearsed_min" => self.rehearsed_min as f64,
            "rehearsed_max" => self.rehearsed_max as f64,
            "fit_steps_total" => self.fit_steps_total as f64,
            _ => return None,
        })
    }
}

/// Render the CSV text: LF endings, reals to six decimals.
pub fn metrics_csv_string(records: &[MetricsRecord]) -> String {
    let mut out = HEADER.join(",");
    out.push('\n');
    for r in records {
        let row = MetricsRow::from_record(r);
        out.push_str(&format!(
            "{},{:.6},{:.6},{:.6},{},{},{}\n",
            row.step,
            row.train_acc,
            row.test_acc,
            row.rehearsed_mean,
            row.rehearsed_min,
            row.rehearsed_max,
            row.fit_steps_total
        ));
    }
    out
}

pub fn write_metrics_csv(records: &[MetricsRecord], path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| HarnessError::io(path, e))?;
    let mut w = BufWriter::new(file);
    w.write_all(metrics_csv_string(records).as_bytes())
        .and_then(|_| w.flush())
        .map_err(|e| HarnessError::io(path, e))
}

pub fn parse_metrics_csv(text: &str, origin: &Path) -> Result<Vec<MetricsRow>> {
    let bad = |message: String| HarnessError::Csv {
        path: origin.to_path_buf(),
        message,
    };
    let mut reader = csv::ReaderBuilder::new().from_reader(text.as_bytes());
    let header = reader.headers().map_err(|e| bad(e.to_string()))?;
    if header.iter().ne(HEADER) {
        return Err(bad(format!("unexpected header {:?}", header.iter().collect::<Vec<_>>())));
    }
    reader
        .deserialize()
        .map(|row| row.map_err(|e| bad(e.to_string())))
        .collect()
}

pub fn read_metrics_csv(path: &Path) -> Result<Vec<MetricsRow>> {
    let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
    parse_metrics_csv(&text, path)
}
