//! Report files.
//!
//! A compare run writes `comparison.csv`; a sweep over axis `x` writes
//! `sweep_x.csv` in long format and `plotdata_x.csv` with one row per axis
//! value and a mean and standard deviation column per scheduler. Every
//! result also lands in `report.json`. Numbers use shortest round-trip
//! formatting and rows follow the result's cell order, so equal results
//! give byte-identical files.

use std::fs;
use std::path::{Path, PathBuf};

use rlsched_core::metrics::MetricsReport;
use serde_json::{json, Map, Value};

use crate::harness::{mean_std, SweepResult};

#[derive(Debug, thiserror::Error)]
#[error("cannot write {}: {source}", path.display())]
pub struct IoError {
    pub path: PathBuf,
    #[source]
    pub source: std::io::Error,
}

/// Which files [`emit_reports`] writes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Formats {
    pub csv: bool,
    pub json: bool,
}

impl Formats {
    pub const ALL: Formats = Formats { csv: true, json: true };
}

/// Column names, in order, of the flattened [`MetricsReport`].
pub const METRIC_COLUMNS: [&str; 15] = [
    "mean_response_ms",
    "p95_response_ms",
    "throughput_rps",
    "utilization_pct_cpu",
    "utilization_pct_memory",
    "utilization_pct_storage",
    "utilization_pct_network",
    "utilization_pct_overall",
    "energy_joules",
    "cost_efficiency_pct",
    "scheduling_efficiency_pct",
    "offered",
    "completed",
    "rejected",
    "in_flight_at_end",
];

/// Values in [`METRIC_COLUMNS`] order.
pub fn metric_values(r: &MetricsReport) -> [f64; 15] {
    let u = &r.utilization_pct;
    [
        r.mean_response_ms,
        r.p95_response_ms,
        r.throughput_rps,
        u.cpu,
        u.memory,
        u.storage,
        u.network,
        u.overall,
        r.energy_joules,
        r.cost_efficiency_pct,
        r.scheduling_efficiency_pct,
        r.offered as f64,
        r.completed as f64,
        r.rejected as f64,
        r.in_flight_at_end as f64,
    ]
}

fn num(v: f64) -> String {
    if v.is_finite() {
        v.to_string()
    } else {
        String::new()
    }
}

fn row(fields: impl IntoIterator<Item = String>) -> String {
    let mut line = fields.into_iter().collect::<Vec<_>>().join(",");
    line.push('\n');
    line
}

/// Per-seed rows followed by one `mean` row per (axis value, scheduler).
pub fn comparison_csv(result: &SweepResult) -> String {
    let mut out = row(["axis_value", "scheduler", "seed"].into_iter().chain(METRIC_COLUMNS).map(String::from));
    for c in &result.cells {
        let head = [c.axis_value.clone(), c.scheduler.name().into(), c.seed.to_string()];
        out += &row(head.into_iter().chain(metric_values(&c.report).map(num)));
    }
    for value in &result.values {
        for &k in &result.schedulers {
            let per_seed: Vec<[f64; 15]> = result.cells_for(value, k).map(|c| metric_values(&c.report)).collect();
            let means = (0..METRIC_COLUMNS.len()).map(|i| num(mean_std(&per_seed.iter().map(|v| v[i]).collect::<Vec<_>>()).0));
            let head = [value.clone(), k.name().into(), "mean".into()];
            out += &row(head.into_iter().chain(means));
        }
    }
    out
}

/// Long format: `axis_value,scheduler,seed,metric,value`.
pub fn sweep_csv(result: &SweepResult) -> String {
    let mut out = String::from("axis_value,scheduler,seed,metric,value\n");
    for c in &result.cells {
        for (name, v) in METRIC_COLUMNS.iter().zip(metric_values(&c.report)) {
            out += &row([c.axis_value.clone(), c.scheduler.name().into(), c.seed.to_string(), name.to_string(), num(v)]);
        }
    }
    out
}

/// Scheduling efficiency, seed mean and standard deviation per scheduler.
pub fn plotdata_csv(result: &SweepResult) -> String {
    let head = std::iter::once(result.axis.clone())
        .chain(result.schedulers.iter().flat_map(|k| [format!("{}_mean", k.name()), format!("{}_std", k.name())]));
    let mut out = row(head);
    for value in &result.values {
        let stats = result.schedulers.iter().flat_map(|&k| {
            let (m, s) = result.stat(value, k, |r| r.scheduling_efficiency_pct);
            [num(m), num(s)]
        });
        out += &row(std::iter::once(value.clone()).chain(stats));
    }
    out
}

fn report_json(r: &MetricsReport) -> Value {
    let mut m = Map::new();
    for (name, v) in METRIC_COLUMNS.iter().zip(metric_values(r)) {
        m.insert(name.to_string(), json!(v));
    }
    for name in ["offered", "completed", "rejected", "in_flight_at_end"] {
        m[name] = json!(m[name].as_f64().unwrap_or(0.0) as u64);
    }
    Value::Object(m)
}

pub fn result_json(result: &SweepResult) -> Value {
    let cells: Vec<Value> = result
        .cells
        .iter()
        .map(|c| {
            json!({
                "axis_value": c.axis_value,
                "scheduler": c.scheduler.name(),
                "seed": c.seed,
                "report": report_json(&c.report),
                "learning_curve": c.learning_curve,
            })
        })
        .collect();
    let mut summary = Vec::new();
    for value in &result.values {
        for &k in &result.schedulers {
            let mut stats = Map::new();
            for (i, name) in METRIC_COLUMNS.iter().enumerate() {
                let xs: Vec<f64> = result.cells_for(value, k).map(|c| metric_values(&c.report)[i]).collect();
                let (m, s) = mean_std(&xs);
                stats.insert(name.to_string(), json!({ "mean": m, "std": s }));
            }
            summary.push(json!({ "axis_value": value, "scheduler": k.name(), "metrics": stats }));
        }
    }
    json!({
        "axis": result.axis,
        "values": result.values,
        "schedulers": result.schedulers.iter().map(|k| k.name()).collect::<Vec<_>>(),
        "seeds": result.seeds,
        "cells": cells,
        "summary": summary,
    })
}

fn write(dir: &Path, name: &str, contents: &str, written: &mut Vec<PathBuf>) -> Result<(), IoError> {
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|source| IoError { path: path.clone(), source })?;
    written.push(path);
    Ok(())
}

/// Writes the report files for `results` into `dir`, creating it if needed.
/// Returns the paths written, in order.
pub fn emit_reports(results: &[SweepResult], dir: &Path, formats: Formats) -> Result<Vec<PathBuf>, IoError> {
    fs::create_dir_all(dir).map_err(|source| IoError { path: dir.to_path_buf(), source })?;
    let mut written = Vec::new();
    if formats.csv {
        for r in results {
            if r.axis == "scheduler" {
                write(dir, "comparison.csv", &comparison_csv(r), &mut written)?;
            } else {
                write(dir, &format!("sweep_{}.csv", r.axis), &sweep_csv(r), &mut written)?;
                write(dir, &format!("plotdata_{}.csv", r.axis), &plotdata_csv(r), &mut written)?;
            }
        }
    }
    if formats.json {
        let doc = json!({ "experiments": results.iter().map(result_json).collect::<Vec<_>>() });
        let mut text = serde_json::to_string_pretty(&doc).expect("values are serializable");
        text.push('\n');
        write(dir, "report.json", &text, &mut written)?;
    }
    Ok(written)
}
