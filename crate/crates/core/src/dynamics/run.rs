use serde::Serialize;

use super::{
    average_into, convergence_b, mean, ConvergenceTrace, DynamicsError, Mode, RunConfig, StateVector, StopReason,
};
use crate::datagen::DistributionSpec;
use crate::graph::{LatticeSpec, Topology};
use crate::rng::seeded;

/// First round at which `b` dropped below `threshold`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Crossing {
    pub threshold: f64,
    pub round: Option<usize>,
}

/// What an observer sees after round 0 and after every update.
pub struct RoundView<'a> {
    pub round: usize,
    pub b: f64,
    pub topology: &'a Topology,
    pub state: &'a [f64],
    /// Thresholds first crossed in this round.
    pub newly_crossed: &'a [f64],
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub trace: ConvergenceTrace,
    pub topology: Topology,
    pub state: StateVector,
}

/// Recomputes crossings from a recorded series.
pub fn threshold_crossings(b_per_round: &[f64], thresholds: &[f64]) -> Vec<Crossing> {
    thresholds
        .iter()
        .map(|&threshold| Crossing {
            threshold,
            round: b_per_round.iter().position(|&b| b < threshold),
        })
        .collect()
}

pub fn run(config: &RunConfig, topology: Topology, init: StateVector) -> Result<RunOutcome, DynamicsError> {
    run_observed(config, topology, init, |_| {})
}

/// Runs the round loop, calling `observer` after round 0 and after each
/// update.
///
/// Evolutionary mode rewires before each averaging step using a generator
/// seeded from `topology_seed`; the other modes never touch the topology.
/// Stops when every threshold is crossed, when `b` moves by less than
/// `stop_epsilon` between rounds, or at `max_rounds`, checked in that order.
pub fn run_observed<F>(
    config: &RunConfig,
    mut topology: Topology,
    init: StateVector,
    mut observer: F,
) -> Result<RunOutcome, DynamicsError>
where
    F: FnMut(&RoundView<'_>),
{
    config.validate()?;
    let violations = topology.validate();
    if !violations.is_empty() {
        return Err(crate::graph::GraphError::Invalid(violations).into());
    }
    let n = topology.n_nodes();
    if init.len() != n {
        return Err(DynamicsError::LengthMismatch {
            state: init.len(),
            nodes: n,
        });
    }

    let mut rng = seeded(config.topology_seed);
    let mut state = init.into_inner();
    let mut next = vec![0.0; n];
    let initial_mean = mean(&state);

    let mut crossings: Vec<Crossing> = config
        .thresholds
        .iter()
        .map(|&threshold| Crossing { threshold, round: None })
        .collect();
    let mut newly = Vec::with_capacity(crossings.len());
    let mark = |round: usize, b: f64, crossings: &mut [Crossing], newly: &mut Vec<f64>| {
        newly.clear();
        for c in crossings.iter_mut().filter(|c| c.round.is_none() && b < c.threshold) {
            c.round = Some(round);
            newly.push(c.threshold);
        }
        !crossings.is_empty() && crossings.iter().all(|c| c.round.is_some())
    };

    let b0 = convergence_b(&state)?;
    let mut b_per_round = vec![b0];
    let mut done = mark(0, b0, &mut crossings, &mut newly);
    observer(&RoundView {
        round: 0,
        b: b0,
        topology: &topology,
        state: &state,
        newly_crossed: &newly,
    });

    let mut stop_reason = if done {
        StopReason::ThresholdsMet
    } else {
        StopReason::MaxRounds
    };
    let mut round = 0;
    while !done && round < config.max_rounds {
        round += 1;
        if config.mode == Mode::Evolutionary {
            topology.rewire_round(&mut rng);
        }
        average_into(&topology, &state, &mut next);
        std::mem::swap(&mut state, &mut next);

        let b = convergence_b(&state)?;
        let prev = *b_per_round.last().expect("round 0 recorded");
        b_per_round.push(b);
        done = mark(round, b, &mut crossings, &mut newly);
        observer(&RoundView {
            round,
            b,
            topology: &topology,
            state: &state,
            newly_crossed: &newly,
        });

        if done {
            stop_reason = StopReason::ThresholdsMet;
        } else if (b - prev).abs() < config.stop_epsilon {
            stop_reason = StopReason::Epsilon;
            break;
        }
    }

    let final_mean = mean(&state);
    Ok(RunOutcome {
        trace: ConvergenceTrace {
            b_per_round,
            crossings,
            stop_reason,
            initial_mean,
            final_mean,
        },
        topology,
        state: StateVector::from_finite(state),
    })
}

/// Result of evolving, freezing, then averaging on the frozen network.
#[derive(Debug, Clone)]
pub struct FrozenOutcome {
    /// The evolutionary run that produced the snapshot.
    pub phase_one: ConvergenceTrace,
    /// Rounds of evolution before the freeze.
    pub frozen_after: usize,
    /// The averaging run on the fixed snapshot.
    pub phase_two: RunOutcome,
}

/// Evolves the Moore lattice until `b < freeze_threshold`, keeps that
/// topology fixed, and averages freshly generated data on it.
pub fn frozen_pipeline(
    config: &RunConfig,
    spec: &LatticeSpec,
    dist: &DistributionSpec,
) -> Result<FrozenOutcome, DynamicsError> {
    frozen_pipeline_observed(config, spec, dist, |_| {})
}

pub(crate) fn frozen_pipeline_observed<F>(
    config: &RunConfig,
    spec: &LatticeSpec,
    dist: &DistributionSpec,
    observer: F,
) -> Result<FrozenOutcome, DynamicsError>
where
    F: FnMut(&RoundView<'_>),
{
    config.validate()?;
    if config.mode != Mode::Frozen {
        return Err(DynamicsError::InvalidConfig(format!(
            "frozen pipeline needs mode frozen, got {}",
            config.mode
        )));
    }
    let freeze = config.freeze_threshold.expect("validated");

    let lattice = Topology::moore_lattice(spec)?;
    let data = dist.generate(spec.rows, spec.cols, &mut seeded(config.data_seed))?;
    let phase_one_config = RunConfig {
        mode: Mode::Evolutionary,
        thresholds: vec![freeze],
        freeze_threshold: None,
        ..config.clone()
    };
    let evolved = run(&phase_one_config, lattice, data)?;
    let Some(frozen_after) = evolved.trace.crossings[0].round else {
        return Err(DynamicsError::FreezeNotReached {
            threshold: freeze,
            rounds: evolved.trace.rounds(),
            reason: evolved.trace.stop_reason,
        });
    };

    let fresh = dist.generate(spec.rows, spec.cols, &mut seeded(config.phase_two_data_seed()))?;
    let phase_two = run_observed(config, evolved.topology, fresh, observer)?;
    Ok(FrozenOutcome {
        phase_one: evolved.trace,
        frozen_after,
        phase_two,
    })
}

/// Builds the lattice and initial data, then runs whichever mode `config`
/// names. Frozen runs report their phase-two outcome.
pub fn simulate(config: &RunConfig, spec: &LatticeSpec, dist: &DistributionSpec) -> Result<RunOutcome, DynamicsError> {
    simulate_observed(config, spec, dist, |_| {})
}

pub(crate) fn simulate_observed<F>(
    config: &RunConfig,
    spec: &LatticeSpec,
    dist: &DistributionSpec,
    observer: F,
) -> Result<RunOutcome, DynamicsError>
where
    F: FnMut(&RoundView<'_>),
{
    match config.mode {
        Mode::Frozen => Ok(frozen_pipeline_observed(config, spec, dist, observer)?.phase_two),
        Mode::Evolutionary | Mode::Automaton => {
            let topology = Topology::moore_lattice(spec)?;
            let data = dist.generate(spec.rows, spec.cols, &mut seeded(config.data_seed))?;
            run_observed(config, topology, data, observer)
        }
    }
}
