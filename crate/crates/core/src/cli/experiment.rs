//! Runs every grid cell over its seed ensemble and aggregates the crossings.

use std::time::Instant;

use serde::Serialize;

use super::config::{member_seeds, ExperimentConfig, RunSpec};
use crate::analytics::{metrics_report, MetricsReport, PathMethod};
use crate::dynamics::{
    frozen_pipeline_observed, simulate_observed, ConvergenceTrace, Crossing, Mode, RoundView, StopReason,
};
use crate::graph::Topology;
use crate::par;

#[derive(Debug, Clone, Serialize)]
pub struct MetricsSnapshot {
    pub threshold: f64,
    /// Round at which `b` first dropped below `threshold`, if it did.
    pub round: Option<usize>,
    pub report: Option<MetricsReport>,
}

#[derive(Debug, Clone, Serialize)]
pub struct MemberReport {
    pub member: usize,
    pub topology_seed: u64,
    pub data_seed: u64,
    pub crossings: Vec<Crossing>,
    pub stop_reason: StopReason,
    pub rounds: usize,
    /// Frozen cells: evolution rounds before the network was fixed.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub frozen_after: Option<usize>,
    pub initial_mean: f64,
    pub final_mean: f64,
    pub final_b: f64,
    pub metrics: Vec<MetricsSnapshot>,
    #[serde(skip)]
    pub trace: Option<ConvergenceTrace>,
    #[serde(skip)]
    pub snapshots: Vec<(f64, Topology)>,
}

/// Ensemble statistics for one threshold. Members that never crossed count
/// as infinitely slow.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Aggregate {
    pub threshold: f64,
    pub median: Option<f64>,
    pub min: Option<usize>,
    pub max: Option<usize>,
    pub reached: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct CellReport {
    pub id: usize,
    pub label: String,
    pub table: String,
    pub spec: RunSpec,
    pub members: Vec<MemberReport>,
    pub aggregate: Vec<Aggregate>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl CellReport {
    pub fn failed(&self) -> bool {
        self.error.is_some()
    }

    pub fn medians(&self) -> Vec<Option<f64>> {
        self.aggregate.iter().map(|a| a.median).collect()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CellTiming {
    pub id: usize,
    pub seconds: f64,
    pub member_seconds: Vec<f64>,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct Timing {
    pub total_seconds: f64,
    pub cells: Vec<CellTiming>,
}

#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub cells: Vec<CellReport>,
    pub timing: Timing,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Success,
    AllFailed,
    Partial,
}

impl Outcome {
    pub fn exit_code(self) -> i32 {
        match self {
            Outcome::Success => 0,
            Outcome::AllFailed => 2,
            Outcome::Partial => 3,
        }
    }
}

impl ExperimentReport {
    pub fn outcome(&self) -> Outcome {
        let failed = self.cells.iter().filter(|c| c.failed()).count();
        match failed {
            0 => Outcome::Success,
            f if f == self.cells.len() => Outcome::AllFailed,
            _ => Outcome::Partial,
        }
    }
}

/// Median with `None` as +infinity; `None` if the middle falls there.
pub fn aggregate(threshold: f64, rounds: &[Option<usize>]) -> Aggregate {
    let mut sorted: Vec<usize> = rounds.iter().map(|r| r.unwrap_or(usize::MAX)).collect();
    sorted.sort_unstable();
    let finite = |x: usize| (x != usize::MAX).then_some(x);
    let median = match sorted.len() {
        0 => None,
        len if len % 2 == 1 => finite(sorted[len / 2]).map(|x| x as f64),
        len => match (finite(sorted[len / 2 - 1]), finite(sorted[len / 2])) {
            (Some(a), Some(b)) => Some((a + b) as f64 / 2.0),
            _ => None,
        },
    };
    Aggregate {
        threshold,
        median,
        min: sorted.first().copied().and_then(finite),
        max: sorted.last().copied().and_then(finite),
        reached: rounds.iter().filter(|r| r.is_some()).count(),
    }
}

fn run_member(config: &ExperimentConfig, spec: &RunSpec, member: usize) -> Result<MemberReport, String> {
    let (topology_seed, data_seed) = member_seeds(config.seed, member);
    let run_config = spec.run_config(topology_seed, data_seed);
    let lattice = spec.lattice();

    let mut pending: Vec<f64> = config.metrics_at.clone();
    let mut captured: Vec<(f64, usize, Topology)> = Vec::new();
    let mut observer = |view: &RoundView<'_>| {
        pending.retain(|&t| {
            if view.b < t {
                captured.push((t, view.round, view.topology.clone()));
                false
            } else {
                true
            }
        });
    };
    let (outcome, frozen_after) = match run_config.mode {
        Mode::Frozen => {
            let f = frozen_pipeline_observed(&run_config, &lattice, &spec.distribution, &mut observer)
                .map_err(|e| e.to_string())?;
            (f.phase_two, Some(f.frozen_after))
        }
        Mode::Evolutionary | Mode::Automaton => (
            simulate_observed(&run_config, &lattice, &spec.distribution, &mut observer).map_err(|e| e.to_string())?,
            None,
        ),
    };

    let method = PathMethod::Auto {
        node_budget: config.metrics.node_budget,
        sample_size: config.metrics.sample_size,
        seed: config.metrics.seed,
    };
    let metrics = config
        .metrics_at
        .iter()
        .map(|&t| match captured.iter().find(|c| c.0 == t) {
            Some((_, round, topology)) => MetricsSnapshot {
                threshold: t,
                round: Some(*round),
                report: Some(metrics_report(topology, method)),
            },
            None => MetricsSnapshot {
                threshold: t,
                round: None,
                report: None,
            },
        })
        .collect();

    let trace = outcome.trace;
    Ok(MemberReport {
        member,
        topology_seed,
        data_seed,
        crossings: trace.crossings.clone(),
        stop_reason: trace.stop_reason,
        rounds: trace.rounds(),
        frozen_after,
        initial_mean: trace.initial_mean,
        final_mean: trace.final_mean,
        final_b: *trace.b_per_round.last().expect("round 0 recorded"),
        metrics,
        trace: config.output.traces.then_some(trace),
        snapshots: if config.output.snapshots {
            captured.into_iter().map(|(t, _, topo)| (t, topo)).collect()
        } else {
            Vec::new()
        },
    })
}

pub fn run_experiment(config: &ExperimentConfig) -> ExperimentReport {
    let started = Instant::now();
    let mut cells = Vec::with_capacity(config.runs.len());
    let mut timing = Timing::default();
    for (id, spec) in config.runs.iter().enumerate() {
        let cell_start = Instant::now();
        let members_idx: Vec<usize> = (0..config.seeds).collect();
        let results = par::map_collect(&members_idx, |&member| {
            let t = Instant::now();
            let r = run_member(config, spec, member);
            (r, t.elapsed().as_secs_f64())
        });
        let member_seconds = results.iter().map(|(_, s)| *s).collect();
        let mut members = Vec::with_capacity(results.len());
        let mut error = None;
        for (member, (result, _)) in results.into_iter().enumerate() {
            match result {
                Ok(m) => members.push(m),
                Err(e) => {
                    error.get_or_insert_with(|| format!("member {member}: {e}"));
                }
            }
        }
        let aggregate = if error.is_some() {
            Vec::new()
        } else {
            spec.thresholds
                .iter()
                .enumerate()
                .map(|(k, &t)| {
                    let rounds: Vec<Option<usize>> = members.iter().map(|m| m.crossings[k].round).collect();
                    aggregate(t, &rounds)
                })
                .collect()
        };
        cells.push(CellReport {
            id,
            label: spec.label.clone(),
            table: spec.table(),
            spec: spec.clone(),
            members,
            aggregate,
            error,
        });
        timing.cells.push(CellTiming {
            id,
            seconds: cell_start.elapsed().as_secs_f64(),
            member_seconds,
        });
    }
    timing.total_seconds = started.elapsed().as_secs_f64();
    ExperimentReport {
        config: config.clone(),
        cells,
        timing,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cli::config::parse_config;

    #[test]
    fn median_handles_unreached_members() {
        let a = aggregate(0.1, &[Some(3), Some(5), Some(4)]);
        assert_eq!((a.median, a.min, a.max, a.reached), (Some(4.0), Some(3), Some(5), 3));
        let a = aggregate(0.1, &[Some(3), Some(6)]);
        assert_eq!(a.median, Some(4.5));
        let a = aggregate(0.1, &[Some(3), None, Some(4)]);
        assert_eq!((a.median, a.max, a.reached), (Some(4.0), None, 2));
        let a = aggregate(0.1, &[None, None, Some(4)]);
        assert_eq!((a.median, a.min), (None, Some(4)));
    }

    #[test]
    fn small_grid_runs_and_aggregates() {
        let config = parse_config(
            r#"{"mode": "evolutionary", "seeds": 3, "metrics_at": [1e-2, 1e-30],
                "runs": [{"rows": 12, "cols": 12}, {"rows": 10, "cols": 10, "mode": "frozen", "freeze_at": 0.1}]}"#,
        )
        .unwrap();
        let report = run_experiment(&config);
        assert_eq!(report.outcome(), Outcome::Success);
        assert_eq!(report.cells.len(), 2);
        for cell in &report.cells {
            assert_eq!(cell.members.len(), 3);
            assert_eq!(cell.aggregate.len(), 5);
            let m = &cell.members[0];
            assert!(m.metrics[0].report.is_some());
            assert_eq!(m.metrics[1].round, None);
            assert!(m.trace.is_none());
        }
        assert_eq!(report.cells[1].table, "frozen_uniform");
    }

    #[test]
    fn failing_cells_do_not_abort_others() {
        let config = parse_config(
            r#"{"mode": "automaton", "runs": [
                {"rows": 6, "cols": 6},
                {"rows": 6, "cols": 6, "mode": "frozen", "freeze_at": 1e-9, "max_rounds": 2}
            ]}"#,
        )
        .unwrap();
        let report = run_experiment(&config);
        assert_eq!(report.outcome(), Outcome::Partial);
        assert!(!report.cells[0].failed());
        assert!(report.cells[1].error.as_ref().unwrap().contains("phase 1"));
        assert_eq!(Outcome::Partial.exit_code(), 3);
    }
}
