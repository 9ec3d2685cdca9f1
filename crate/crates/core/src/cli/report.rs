//! Writing experiment results: per-table CSV files and a JSON bundle.

use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde_json::{json, Value};
use thiserror::Error;

use super::config::OutputFormat;
use super::experiment::{CellReport, ExperimentReport};
use crate::analytics::MetricsReport;
use crate::dynamics::export::{fmt_threshold, write_trace_csv};

#[derive(Debug, Error)]
#[error("{}: {source}", path.display())]
pub struct ReportError {
    pub path: PathBuf,
    #[source]
    pub source: io::Error,
}

fn at(path: &Path) -> impl FnOnce(io::Error) -> ReportError + '_ {
    move |source| ReportError {
        path: path.to_path_buf(),
        source,
    }
}

/// Table keys in first-appearance order.
fn tables(report: &ExperimentReport) -> Vec<String> {
    let mut keys: Vec<String> = Vec::new();
    for spec in &report.config.runs {
        let key = spec.table();
        if !keys.contains(&key) {
            keys.push(key);
        }
    }
    keys
}

fn fmt_median(m: Option<f64>) -> String {
    match m {
        Some(x) if x.fract() == 0.0 => format!("{x:.0}"),
        Some(x) => format!("{x:.1}"),
        None => String::new(),
    }
}

/// One row per completed cell, one column per threshold, holding ensemble
/// medians. Failed cells are left out (see the JSON bundle).
pub fn table_csv(report: &ExperimentReport, table: &str) -> String {
    let thresholds = report
        .config
        .runs
        .iter()
        .find(|r| r.table() == table)
        .map(|r| r.thresholds.clone())
        .unwrap_or_default();
    let mut out = String::from("size");
    for t in &thresholds {
        out.push_str(&format!(",b<{}", fmt_threshold(*t)));
    }
    out.push('\n');
    for cell in report.cells.iter().filter(|c| c.table == table && !c.failed()) {
        out.push_str(&csv_field(&cell.label));
        for m in cell.medians() {
            out.push(',');
            out.push_str(&fmt_median(m));
        }
        out.push('\n');
    }
    out
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Topology measurements taken at `metrics_at` thresholds.
pub fn metrics_csv(report: &ExperimentReport) -> String {
    let mut out = format!("cell,member,threshold,round,{}\n", MetricsReport::csv_header());
    for cell in &report.cells {
        for m in &cell.members {
            for snap in &m.metrics {
                if let (Some(round), Some(r)) = (snap.round, &snap.report) {
                    out.push_str(&format!(
                        "{},{},{},{round},{}\n",
                        csv_field(&cell.label),
                        m.member,
                        fmt_threshold(snap.threshold),
                        r.csv_row()
                    ));
                }
            }
        }
    }
    out
}

/// Everything except wall-clock times, which are machine dependent.
pub fn results_json(report: &ExperimentReport) -> Value {
    json!({
        "tool": { "name": env!("CARGO_PKG_NAME"), "version": env!("CARGO_PKG_VERSION") },
        "config": report.config.to_json_value(),
        "outcome": format!("{:?}", report.outcome()).to_lowercase(),
        "cells": report.cells.iter().map(cell_json).collect::<Vec<_>>(),
    })
}

fn cell_json(cell: &CellReport) -> Value {
    serde_json::to_value(cell).expect("cell serializes")
}

/// The JSON bundle: [`results_json`] plus a `timing` section.
pub fn report_json(report: &ExperimentReport) -> Value {
    let mut v = results_json(report);
    v["timing"] = serde_json::to_value(&report.timing).expect("timing serializes");
    v
}

fn write_file(path: &Path, contents: &[u8]) -> Result<(), ReportError> {
    let file = fs::File::create(path).map_err(at(path))?;
    let mut w = BufWriter::new(file);
    w.write_all(contents).map_err(at(path))?;
    w.flush().map_err(at(path))
}

/// Writes the requested formats under `dir` and returns the paths written.
pub fn emit_report(report: &ExperimentReport, format: OutputFormat, dir: &Path) -> Result<Vec<PathBuf>, ReportError> {
    fs::create_dir_all(dir).map_err(at(dir))?;
    let mut written = Vec::new();
    if format.csv() {
        for table in tables(report) {
            let path = dir.join(format!("{table}.csv"));
            write_file(&path, table_csv(report, &table).as_bytes())?;
            written.push(path);
        }
        if !report.config.metrics_at.is_empty() {
            let path = dir.join("metrics.csv");
            write_file(&path, metrics_csv(report).as_bytes())?;
            written.push(path);
        }
    }
    if format.json() {
        let path = dir.join("report.json");
        let mut text = serde_json::to_string_pretty(&report_json(report)).expect("report serializes");
        text.push('\n');
        write_file(&path, text.as_bytes())?;
        written.push(path);
    }

    let traces: Vec<_> = report
        .cells
        .iter()
        .flat_map(|c| c.members.iter().map(move |m| (c.id, m)))
        .filter_map(|(id, m)| m.trace.as_ref().map(|t| (id, m.member, t)))
        .collect();
    if !traces.is_empty() {
        let sub = dir.join("traces");
        fs::create_dir_all(&sub).map_err(at(&sub))?;
        for (id, member, trace) in traces {
            let path = sub.join(format!("cell{id}_m{member}.csv"));
            let mut buf = Vec::new();
            write_trace_csv(trace, &mut buf).map_err(at(&path))?;
            write_file(&path, &buf)?;
            written.push(path);
        }
    }

    for cell in &report.cells {
        for m in &cell.members {
            for (t, topology) in &m.snapshots {
                let sub = dir.join("snapshots");
                fs::create_dir_all(&sub).map_err(at(&sub))?;
                let path = sub.join(format!("cell{}_m{}_b{}.edges", cell.id, m.member, fmt_threshold(*t)));
                write_file(&path, topology.to_edge_list_string().as_bytes())?;
                written.push(path);
            }
        }
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cli::config::parse_config;
    use crate::cli::experiment::run_experiment;

    #[test]
    fn empty_report_gives_header_only_csv() {
        let config =
            parse_config(r#"{"mode": "frozen", "freeze_at": 1e-9, "max_rounds": 1, "rows": 5, "cols": 5}"#).unwrap();
        let report = run_experiment(&config);
        assert!(report.cells[0].failed());
        let csv = table_csv(&report, "frozen_uniform");
        assert_eq!(csv, "size,b<1e-1,b<1e-2,b<1e-3,b<1e-4,b<1e-5\n");
    }

    #[test]
    fn csv_columns_track_thresholds() {
        let config = parse_config(
            r#"{"mode": "automaton", "thresholds": [0.3, 0.1, 0.05], "runs": [{"rows": 6, "cols": 6}, {"rows": 8, "cols": 8}]}"#,
        )
        .unwrap();
        let report = run_experiment(&config);
        let csv = table_csv(&report, "automaton_uniform");
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 3);
        for line in lines {
            assert_eq!(line.split(',').count(), 4, "{line}");
        }
        assert!(csv.starts_with("size,b<3e-1,b<1e-1,b<5e-2\n6x6,"));
    }

    #[test]
    fn median_format() {
        assert_eq!(fmt_median(Some(6.0)), "6");
        assert_eq!(fmt_median(Some(5.5)), "5.5");
        assert_eq!(fmt_median(None), "");
        assert_eq!(csv_field("a,b"), "\"a,b\"");
    }

    #[test]
    fn writes_all_artifacts() {
        let dir = tempfile::tempdir().unwrap();
        let config = parse_config(
            r#"{"mode": "evolutionary", "rows": 8, "cols": 8, "seeds": 2, "metrics_at": [1e-2],
                "output": {"traces": true, "snapshots": true}}"#,
        )
        .unwrap();
        let report = run_experiment(&config);
        let written = emit_report(&report, OutputFormat::Both, dir.path()).unwrap();
        let names: Vec<String> = written
            .iter()
            .map(|p| p.strip_prefix(dir.path()).unwrap().display().to_string())
            .collect();
        assert!(names.contains(&"evolutionary_uniform.csv".to_string()));
        assert!(names.contains(&"metrics.csv".to_string()));
        assert!(names.contains(&"report.json".to_string()));
        assert!(names.contains(&"traces/cell0_m1.csv".to_string()));
        assert!(names.contains(&"snapshots/cell0_m0_b1e-2.edges".to_string()));

        let snap = fs::read_to_string(dir.path().join("snapshots/cell0_m0_b1e-2.edges")).unwrap();
        let topo = crate::Topology::read_edge_list(snap.as_bytes()).unwrap();
        assert_eq!(topo.n_nodes(), 64);
    }

    #[test]
    fn io_errors_carry_the_path() {
        let dir = tempfile::tempdir().unwrap();
        let blocker = dir.path().join("file");
        fs::write(&blocker, b"x").unwrap();
        let config = parse_config(r#"{"mode": "automaton", "rows": 4, "cols": 4}"#).unwrap();
        let report = run_experiment(&config);
        let err = emit_report(&report, OutputFormat::Csv, &blocker.join("sub")).unwrap_err();
        assert!(err.to_string().contains("file"), "{err}");
    }
}
