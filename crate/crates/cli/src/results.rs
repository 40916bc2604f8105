//! Per-instance result rows (CSV) and per-method summaries.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

pub const CSV_COLUMNS: [&str; 6] = ["experiment", "method", "instance_id", "length", "feasible", "wall_ms"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub experiment: String,
    pub method: String,
    pub instance_id: String,
    pub length: f64,
    pub feasible: bool,
    pub wall_ms: f64,
}

pub fn write_csv(rows: &[ResultRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv output is UTF-8")
}

/// Parses a results CSV, refusing any header other than the fixed columns.
pub fn read_csv(text: &str, origin: &Path) -> Result<Vec<ResultRow>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header = r.headers().map_err(|e| CliError::format(origin, e))?;
    if header.iter().ne(CSV_COLUMNS) {
        return Err(CliError::format(
            origin,
            format!("expected columns {}, found {}", CSV_COLUMNS.join(","), header.iter().collect::<Vec<_>>().join(",")),
        ));
    }
    r.deserialize()
        .enumerate()
        .map(|(k, row)| {
            let row: ResultRow = row.map_err(|e| CliError::format(origin, format!("row {}: {e}", k + 1)))?;
            if !(row.length >= 0.0 && row.wall_ms >= 0.0) {
                return Err(CliError::format(origin, format!("row {}: negative length or time", k + 1)));
            }
            Ok(row)
        })
        .collect()
}

/// Statistics for one (experiment, method) pair. Length statistics cover
/// feasible rows only; time covers every row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub experiment: String,
    pub method: String,
    pub instances: usize,
    pub feasible: usize,
    /// `None` when no row is feasible.
    pub mean_length: Option<f64>,
    /// Population standard deviation.
    pub std_length: Option<f64>,
    pub mean_time_s: f64,
}

fn mean_std(xs: &[f64]) -> (Option<f64>, Option<f64>) {
    if xs.is_empty() {
        return (None, None);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (Some(mean), Some(var.sqrt()))
}

/// Summaries keyed by (experiment, method) in first-appearance order.
pub fn summarize(rows: &[ResultRow]) -> Vec<MethodSummary> {
    let mut order: Vec<(String, String)> = Vec::new();
    let mut groups: BTreeMap<(String, String), Vec<&ResultRow>> = BTreeMap::new();
    for row in rows {
        let key = (row.experiment.clone(), row.method.clone());
        groups
            .entry(key.clone())
            .or_insert_with(|| {
                order.push(key);
                Vec::new()
            })
            .push(row);
    }
    order
        .into_iter()
        .map(|key| {
            let group = &groups[&key];
            let lengths: Vec<f64> = group.iter().filter(|r| r.feasible).map(|r| r.length).collect();
            let (mean_length, std_length) = mean_std(&lengths);
            let mean_time_s = group.iter().map(|r| r.wall_ms).sum::<f64>() / group.len() as f64 / 1000.0;
            MethodSummary {
                experiment: key.0,
                method: key.1,
                instances: group.len(),
                feasible: lengths.len(),
                mean_length,
                std_length,
                mean_time_s,
            }
        })
        .collect()
}

/// Markdown table: one row per method with mean ± std tour length and mean
/// wall time in seconds.
pub fn summary_markdown(summaries: &[MethodSummary]) -> String {
    let mut out = String::from(
        "| experiment | method | instances | feasible | mean length | std length | mean time (s) |\n\
         |---|---|---:|---:|---:|---:|---:|\n",
    );
    let cell = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |x| format!("{x:.3}"));
    for s in summaries {
        out.push_str(&format!(
            "| {} | {} | {} | {} | {} | {} | {:.3} |\n",
            s.experiment,
            s.method,
            s.instances,
            s.feasible,
            cell(s.mean_length),
            cell(s.std_length),
            s.mean_time_s
        ));
    }
    out
}

pub fn summary_json(summaries: &[MethodSummary]) -> String {
    let mut s = serde_json::to_string_pretty(summaries).expect("plain data serializes");
    s.push('\n');
    s
}
