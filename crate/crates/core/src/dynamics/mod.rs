//! Synchronous neighborhood averaging and its convergence measure.

pub mod export;
mod run;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::datagen::DataError;
use crate::graph::{GraphError, Topology};

pub use export::{write_trace_csv, RunReport};
pub use run::{
    frozen_pipeline, run, run_observed, simulate, threshold_crossings, Crossing, FrozenOutcome, RoundView, RunOutcome,
};
pub(crate) use run::{frozen_pipeline_observed, simulate_observed};

/// Powers of ten from 1e-1 down to 1e-5.
pub const DEFAULT_THRESHOLDS: [f64; 5] = [1e-1, 1e-2, 1e-3, 1e-4, 1e-5];
pub const DEFAULT_STOP_EPSILON: f64 = 1e-12;
pub const DEFAULT_MAX_ROUNDS: usize = 200_000;

/// Means smaller than this make the convergence ratio meaningless.
pub const DEGENERATE_MEAN: f64 = 1e-30;

#[derive(Debug, Error)]
pub enum DynamicsError {
    #[error("state has {state} values but the topology has {nodes} nodes")]
    LengthMismatch { state: usize, nodes: usize },
    #[error("state value at node {index} is not finite")]
    NonFinite { index: usize },
    #[error("mean {mean:e} is too close to zero for b = std / mean")]
    DegenerateMean { mean: f64 },
    #[error("invalid run config: {0}")]
    InvalidConfig(String),
    #[error("phase 1 stopped ({reason}) after {rounds} rounds without reaching b < {threshold:e}")]
    FreezeNotReached {
        threshold: f64,
        rounds: usize,
        reason: StopReason,
    },
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Data(#[from] DataError),
}

/// One value per node.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector(Vec<f64>);

impl StateVector {
    pub fn new(values: Vec<f64>) -> Result<Self, DynamicsError> {
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(DynamicsError::NonFinite { index });
        }
        Ok(StateVector(values))
    }

    pub(crate) fn from_finite(values: Vec<f64>) -> Self {
        debug_assert!(values.iter().all(|v| v.is_finite()));
        StateVector(values)
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn mean(&self) -> f64 {
        mean(&self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Rewire, then average, every round.
    Evolutionary,
    /// Evolve until a freeze threshold, then average on the fixed snapshot.
    Frozen,
    /// Average on the untouched Moore lattice.
    Automaton,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Evolutionary => "evolutionary",
            Mode::Frozen => "frozen",
            Mode::Automaton => "automaton",
        }
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "evolutionary" => Ok(Mode::Evolutionary),
            "frozen" => Ok(Mode::Frozen),
            "automaton" => Ok(Mode::Automaton),
            other => Err(format!(
                "unknown mode `{other}` (expected evolutionary, frozen or automaton)"
            )),
        }
    }
}

/// Which data the fixed network averages in a frozen run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PhaseTwoData {
    /// A fresh draw from the same distribution.
    #[default]
    Fresh,
    /// The same draw phase 1 started from.
    Same,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    /// `|b_t - b_{t-1}|` fell below the stop epsilon.
    Epsilon,
    MaxRounds,
    ThresholdsMet,
}

impl std::fmt::Display for StopReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            StopReason::Epsilon => "epsilon",
            StopReason::MaxRounds => "max_rounds",
            StopReason::ThresholdsMet => "thresholds_met",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub mode: Mode,
    /// Strictly decreasing, positive.
    pub thresholds: Vec<f64>,
    pub stop_epsilon: f64,
    pub max_rounds: usize,
    pub topology_seed: u64,
    pub data_seed: u64,
    /// Frozen mode only.
    pub freeze_threshold: Option<f64>,
    pub phase_two_data: PhaseTwoData,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            mode: Mode::Evolutionary,
            thresholds: DEFAULT_THRESHOLDS.to_vec(),
            stop_epsilon: DEFAULT_STOP_EPSILON,
            max_rounds: DEFAULT_MAX_ROUNDS,
            topology_seed: 0,
            data_seed: 0,
            freeze_threshold: None,
            phase_two_data: PhaseTwoData::Fresh,
        }
    }
}

impl RunConfig {
    pub fn new(mode: Mode) -> Self {
        RunConfig {
            mode,
            ..Default::default()
        }
    }

    pub fn with_seeds(mut self, topology_seed: u64, data_seed: u64) -> Self {
        self.topology_seed = topology_seed;
        self.data_seed = data_seed;
        self
    }

    pub fn with_thresholds(mut self, thresholds: &[f64]) -> Self {
        self.thresholds = thresholds.to_vec();
        self
    }

    pub fn frozen_at(mut self, freeze_threshold: f64) -> Self {
        self.mode = Mode::Frozen;
        self.freeze_threshold = Some(freeze_threshold);
        self
    }

    pub fn validate(&self) -> Result<(), DynamicsError> {
        let bad = |m: String| Err(DynamicsError::InvalidConfig(m));
        if let Some(t) = self.thresholds.iter().find(|t| !(t.is_finite() && **t > 0.0)) {
            return bad(format!("threshold {t} is not a positive number"));
        }
        if let Some(w) = self.thresholds.windows(2).find(|w| w[1] >= w[0]) {
            return bad(format!("thresholds must strictly decrease ({} then {})", w[0], w[1]));
        }
        if !(self.stop_epsilon.is_finite() && self.stop_epsilon > 0.0) {
            return bad(format!("stop_epsilon {} must be positive", self.stop_epsilon));
        }
        match (self.mode, self.freeze_threshold) {
            (Mode::Frozen, None) => return bad("frozen mode needs a freeze threshold".into()),
            (_, Some(f)) if !(f.is_finite() && f > 0.0) => {
                return bad(format!("freeze threshold {f} must be positive"))
            }
            _ => {}
        }
        Ok(())
    }

    /// Seed for the data averaged by the fixed network in frozen mode.
    pub fn phase_two_data_seed(&self) -> u64 {
        match self.phase_two_data {
            PhaseTwoData::Fresh => crate::rng::derive_seed(self.data_seed, 1),
            PhaseTwoData::Same => self.data_seed,
        }
    }
}

/// Per-round convergence record.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceTrace {
    /// `b` before any update, then after each round.
    pub b_per_round: Vec<f64>,
    pub crossings: Vec<Crossing>,
    pub stop_reason: StopReason,
    pub initial_mean: f64,
    pub final_mean: f64,
}

impl ConvergenceTrace {
    /// Number of averaging rounds performed.
    pub fn rounds(&self) -> usize {
        self.b_per_round.len() - 1
    }

    pub fn crossing(&self, threshold: f64) -> Option<usize> {
        self.crossings
            .iter()
            .find(|c| c.threshold == threshold)
            .and_then(|c| c.round)
    }

    /// Crossing rounds in threshold order.
    pub fn crossing_rounds(&self) -> Vec<Option<usize>> {
        self.crossings.iter().map(|c| c.round).collect()
    }

    /// `|final - initial| / |initial|`.
    pub fn mean_drift(&self) -> f64 {
        ((self.final_mean - self.initial_mean) / self.initial_mean).abs()
    }
}

/// Neumaier-compensated sum.
pub fn compensated_sum(values: &[f64]) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for &v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

pub fn mean(values: &[f64]) -> f64 {
    compensated_sum(values) / values.len() as f64
}

/// Population standard deviation over mean.
pub fn convergence_b(values: &[f64]) -> Result<f64, DynamicsError> {
    let m = mean(values);
    if m.is_nan() || m.abs() < DEGENERATE_MEAN {
        return Err(DynamicsError::DegenerateMean { mean: m });
    }
    let var = values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / values.len() as f64;
    Ok(var.sqrt() / m)
}

#[inline]
fn average_node(topology: &Topology, src: &[f64], i: usize, div: f64) -> f64 {
    let q = topology.q();
    let list = &topology.in_edges()[i * q..(i + 1) * q];
    let mut sum = 0.0;
    for j in list {
        sum += src[j.index()];
    }
    sum += src[i];
    sum / div
}

/// One synchronous update on the sequential path.
pub fn average_into_sequential(topology: &Topology, src: &[f64], dst: &mut [f64]) {
    assert_eq!(src.len(), topology.n_nodes());
    assert_eq!(dst.len(), topology.n_nodes());
    let div = (topology.q() + 1) as f64;
    for (i, out) in dst.iter_mut().enumerate() {
        *out = average_node(topology, src, i, div);
    }
}

/// One synchronous update: each node becomes the mean of its in-neighbors
/// (in slot order) and itself (added last), all read from `src`.
pub fn average_into(topology: &Topology, src: &[f64], dst: &mut [f64]) {
    assert_eq!(src.len(), topology.n_nodes());
    assert_eq!(dst.len(), topology.n_nodes());
    let div = (topology.q() + 1) as f64;
    crate::par::fill_indexed(dst, |i| average_node(topology, src, i, div));
}

pub fn average_step(topology: &Topology, state: &StateVector) -> Result<StateVector, DynamicsError> {
    if state.len() != topology.n_nodes() {
        return Err(DynamicsError::LengthMismatch {
            state: state.len(),
            nodes: topology.n_nodes(),
        });
    }
    let mut out = vec![0.0; state.len()];
    average_into(topology, state.values(), &mut out);
    Ok(StateVector(out))
}
