use std::io::Write;

use serde::Serialize;

use super::{ConvergenceTrace, RunConfig, StopReason};
use crate::dynamics::Crossing;

/// `round,b` rows, a blank line, then a `threshold,round` block. Uncrossed
/// thresholds leave the round empty.
pub fn write_trace_csv<W: Write>(trace: &ConvergenceTrace, mut w: W) -> std::io::Result<()> {
    writeln!(w, "round,b")?;
    for (round, b) in trace.b_per_round.iter().enumerate() {
        writeln!(w, "{round},{}", fmt_sci(*b))?;
    }
    writeln!(w)?;
    writeln!(w, "threshold,round")?;
    for c in &trace.crossings {
        match c.round {
            Some(r) => writeln!(w, "{},{r}", fmt_threshold(c.threshold))?,
            None => writeln!(w, "{},", fmt_threshold(c.threshold))?,
        }
    }
    w.flush()
}

/// Six significant digits in scientific notation.
pub fn fmt_sci(x: f64) -> String {
    format!("{x:.5e}")
}

/// Shortest scientific form, e.g. `1e-3`.
pub fn fmt_threshold(x: f64) -> String {
    format!("{x:e}")
}

/// Summary of one run for JSON output.
#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub config: RunConfig,
    pub crossings: Vec<Crossing>,
    pub stop_reason: StopReason,
    pub rounds: usize,
    pub initial_mean: f64,
    pub final_mean: f64,
    pub final_b: f64,
    pub wall_time_seconds: f64,
}

impl RunReport {
    pub fn new(config: &RunConfig, trace: &ConvergenceTrace, wall_time_seconds: f64) -> Self {
        RunReport {
            config: config.clone(),
            crossings: trace.crossings.clone(),
            stop_reason: trace.stop_reason,
            rounds: trace.rounds(),
            initial_mean: trace.initial_mean,
            final_mean: trace.final_mean,
            final_b: *trace.b_per_round.last().expect("trace has round 0"),
            wall_time_seconds,
        }
    }
}
