//! Collective averaging on 8-regular directed networks whose nodes rewire by
//! exchanging in-neighbors, plus the topology measurements used to explain
//! how fast the average spreads.
//!
//! Parallel kernels are enabled by the default `parallel` feature; building
//! with `--no-default-features` gives bit-identical sequential results.

pub mod analytics;
pub mod cli;
pub mod datagen;
pub mod dynamics;
pub mod graph;
pub mod par;
pub mod rng;

pub use analytics::{MetricsReport, PathMethod, PathStats};
pub use datagen::DistributionSpec;
pub use dynamics::{ConvergenceTrace, Mode, RunConfig, StateVector, StopReason};
pub use graph::{LatticeSpec, NodeId, Topology};
