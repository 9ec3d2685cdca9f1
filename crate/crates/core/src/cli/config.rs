//! Experiment configuration files.
//!
//! A config is a JSON object. Top-level run fields (`mode`, `rows`, `cols`,
//! `distribution`, `thresholds`, ...) act as defaults for every entry of
//! `runs`; when `runs` is absent the top level describes a single run.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

use crate::analytics::{DEFAULT_NODE_BUDGET, DEFAULT_SAMPLE_SIZE};
use crate::datagen::DistributionSpec;
use crate::dynamics::export::fmt_threshold;
use crate::dynamics::{Mode, PhaseTwoData, RunConfig, DEFAULT_MAX_ROUNDS, DEFAULT_STOP_EPSILON, DEFAULT_THRESHOLDS};
use crate::graph::{LatticeSpec, MOORE_DEGREE};
use crate::rng::derive_seed;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("config syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("config field `{path}`: {message}")]
    Field { path: String, message: String },
}

impl ConfigError {
    fn field(path: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigError::Field {
            path: path.into(),
            message: message.into(),
        }
    }

    pub fn path(&self) -> Option<&str> {
        match self {
            ConfigError::Field { path, .. } => Some(path),
            ConfigError::Syntax { .. } => None,
        }
    }
}

/// Run fields as written in a file; everything optional.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunFields {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mode: Option<Mode>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rows: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cols: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub periodic: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub distribution: Option<DistributionSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub thresholds: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stop_epsilon: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_rounds: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub freeze_at: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phase_two_data: Option<PhaseTwoData>,
}

const RUN_KEYS: &[&str] = &[
    "label",
    "mode",
    "rows",
    "cols",
    "periodic",
    "q",
    "distribution",
    "thresholds",
    "stop_epsilon",
    "max_rounds",
    "freeze_at",
    "phase_two_data",
];
const TOP_KEYS: &[&str] = &["name", "runs", "seed", "seeds", "metrics_at", "metrics", "output"];

impl RunFields {
    /// Fills unset fields from `defaults`.
    fn or(&self, defaults: &RunFields) -> RunFields {
        RunFields {
            label: self.label.clone().or_else(|| defaults.label.clone()),
            mode: self.mode.or(defaults.mode),
            rows: self.rows.or(defaults.rows),
            cols: self.cols.or(defaults.cols),
            periodic: self.periodic.or(defaults.periodic),
            q: self.q.or(defaults.q),
            distribution: self.distribution.or(defaults.distribution),
            thresholds: self.thresholds.clone().or_else(|| defaults.thresholds.clone()),
            stop_epsilon: self.stop_epsilon.or(defaults.stop_epsilon),
            max_rounds: self.max_rounds.or(defaults.max_rounds),
            freeze_at: self.freeze_at.or(defaults.freeze_at),
            phase_two_data: self.phase_two_data.or(defaults.phase_two_data),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
struct ConfigFile {
    #[serde(flatten)]
    defaults: RunFields,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    runs: Option<Vec<RunFields>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    seeds: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    metrics_at: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    metrics: Option<MetricsOptionsFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    output: Option<OutputOptionsFile>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TopFields {
    name: Option<String>,
    runs: Option<Vec<RunFields>>,
    seed: Option<u64>,
    seeds: Option<usize>,
    metrics_at: Option<Vec<f64>>,
    metrics: Option<MetricsOptionsFile>,
    output: Option<OutputOptionsFile>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MetricsOptionsFile {
    node_budget: Option<usize>,
    sample_size: Option<usize>,
    seed: Option<u64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct OutputOptionsFile {
    dir: Option<PathBuf>,
    format: Option<OutputFormat>,
    traces: Option<bool>,
    snapshots: Option<bool>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
    #[default]
    Both,
}

impl OutputFormat {
    pub fn csv(self) -> bool {
        matches!(self, OutputFormat::Csv | OutputFormat::Both)
    }

    pub fn json(self) -> bool {
        matches!(self, OutputFormat::Json | OutputFormat::Both)
    }
}

/// One fully resolved grid cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSpec {
    pub label: String,
    pub mode: Mode,
    pub rows: usize,
    pub cols: usize,
    pub periodic: bool,
    pub q: usize,
    pub distribution: DistributionSpec,
    pub thresholds: Vec<f64>,
    pub stop_epsilon: f64,
    pub max_rounds: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub freeze_at: Option<f64>,
    pub phase_two_data: PhaseTwoData,
}

impl RunSpec {
    pub fn lattice(&self) -> LatticeSpec {
        LatticeSpec {
            rows: self.rows,
            cols: self.cols,
            periodic: self.periodic,
        }
    }

    pub fn run_config(&self, topology_seed: u64, data_seed: u64) -> RunConfig {
        RunConfig {
            mode: self.mode,
            thresholds: self.thresholds.clone(),
            stop_epsilon: self.stop_epsilon,
            max_rounds: self.max_rounds,
            topology_seed,
            data_seed,
            freeze_threshold: self.freeze_at,
            phase_two_data: self.phase_two_data,
        }
    }

    /// Groups cells into output tables.
    pub fn table(&self) -> String {
        format!("{}_{}", self.mode, self.distribution.kind())
    }

    fn as_fields(&self) -> RunFields {
        RunFields {
            label: Some(self.label.clone()),
            mode: Some(self.mode),
            rows: Some(self.rows),
            cols: Some(self.cols),
            periodic: Some(self.periodic),
            q: Some(self.q),
            distribution: Some(self.distribution),
            thresholds: Some(self.thresholds.clone()),
            stop_epsilon: Some(self.stop_epsilon),
            max_rounds: Some(self.max_rounds),
            freeze_at: self.freeze_at,
            phase_two_data: Some(self.phase_two_data),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MetricsOptions {
    pub node_budget: usize,
    pub sample_size: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutputOptions {
    pub dir: PathBuf,
    pub format: OutputFormat,
    /// Write a per-member `round,b` trace.
    pub traces: bool,
    /// Write edge lists of `metrics_at` snapshots.
    pub snapshots: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub name: Option<String>,
    pub runs: Vec<RunSpec>,
    pub seed: u64,
    /// Ensemble size per cell.
    pub seeds: usize,
    pub metrics_at: Vec<f64>,
    pub metrics: MetricsOptions,
    pub output: OutputOptions,
}

/// Seeds used by ensemble member `member` under base seed `base`.
pub fn member_seeds(base: u64, member: usize) -> (u64, u64) {
    let m = base.wrapping_add(member as u64);
    (derive_seed(m, 1), derive_seed(m, 2))
}

/// Command-line values that replace config values everywhere they appear.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub mode: Option<Mode>,
    pub rows: Option<usize>,
    pub cols: Option<usize>,
    pub distribution: Option<DistributionSpec>,
    pub seed: Option<u64>,
    pub seeds: Option<usize>,
    pub thresholds: Option<Vec<f64>>,
    pub stop_epsilon: Option<f64>,
    pub max_rounds: Option<usize>,
    pub freeze_at: Option<f64>,
    pub metrics_at: Option<Vec<f64>>,
    pub out: Option<PathBuf>,
    pub format: Option<OutputFormat>,
}

impl Overrides {
    fn apply(&self, file: &mut ConfigFile) {
        macro_rules! put {
            ($field:ident) => {
                if let Some(v) = &self.$field {
                    file.defaults.$field = Some(v.clone());
                    for run in file.runs.iter_mut().flatten() {
                        run.$field = None;
                    }
                }
            };
        }
        put!(mode);
        put!(rows);
        put!(cols);
        put!(distribution);
        put!(thresholds);
        put!(stop_epsilon);
        put!(max_rounds);
        put!(freeze_at);
        if self.rows.is_some() || self.cols.is_some() {
            // labels derived from the old sizes would be stale
            file.defaults.label = None;
            for run in file.runs.iter_mut().flatten() {
                run.label = None;
            }
        }
        if self.seed.is_some() {
            file.seed = self.seed;
        }
        if self.seeds.is_some() {
            file.seeds = self.seeds;
        }
        if self.metrics_at.is_some() {
            file.metrics_at = self.metrics_at.clone();
        }
        if self.out.is_some() || self.format.is_some() {
            let out = file.output.get_or_insert_with(Default::default);
            if self.out.is_some() {
                out.dir = self.out.clone();
            }
            if self.format.is_some() {
                out.format = self.format;
            }
        }
    }
}

/// Parses and validates a config document, filling defaults.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    parse_config_with(text, &Overrides::default())
}

/// Like [`parse_config`], with command-line overrides applied before
/// validation.
pub fn parse_config_with(text: &str, overrides: &Overrides) -> Result<ExperimentConfig, ConfigError> {
    let value: Value = serde_json::from_str(text).map_err(|e| ConfigError::Syntax {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let mut file = file_from_value(value)?;
    overrides.apply(&mut file);
    resolve(file)
}

/// Builds a config from overrides alone (no file).
pub fn config_from_overrides(overrides: &Overrides) -> Result<ExperimentConfig, ConfigError> {
    let mut file = ConfigFile::default();
    overrides.apply(&mut file);
    resolve(file)
}

fn file_from_value(value: Value) -> Result<ConfigFile, ConfigError> {
    let Value::Object(map) = &value else {
        return Err(ConfigError::field("$", "config must be a JSON object"));
    };
    if let Some(key) = map
        .keys()
        .find(|k| !RUN_KEYS.contains(&k.as_str()) && !TOP_KEYS.contains(&k.as_str()))
    {
        return Err(ConfigError::field(key.clone(), "unknown field"));
    }
    // Run fields at the top level are defaults for every cell. They are
    // split off so each half deserializes with exact error paths.
    let (run, top): (Map<String, Value>, Map<String, Value>) = map
        .clone()
        .into_iter()
        .partition(|(k, _)| RUN_KEYS.contains(&k.as_str()));
    let defaults: RunFields = tracked(Value::Object(run))?;
    let top: TopFields = tracked(Value::Object(top))?;
    Ok(ConfigFile {
        defaults,
        name: top.name,
        runs: top.runs,
        seed: top.seed,
        seeds: top.seeds,
        metrics_at: top.metrics_at,
        metrics: top.metrics,
        output: top.output,
    })
}

fn tracked<T: serde::de::DeserializeOwned>(value: Value) -> Result<T, ConfigError> {
    serde_path_to_error::deserialize(value).map_err(|e| {
        let path = e.path().to_string();
        ConfigError::field(
            if path.is_empty() || path == "." {
                "$".into()
            } else {
                path
            },
            e.into_inner().to_string(),
        )
    })
}

fn resolve(file: ConfigFile) -> Result<ExperimentConfig, ConfigError> {
    let entries: Vec<(String, RunFields)> = match &file.runs {
        Some(runs) => {
            if runs.is_empty() {
                return Err(ConfigError::field("runs", "at least one run is required"));
            }
            runs.iter()
                .enumerate()
                .map(|(i, r)| (format!("runs[{i}]"), r.or(&file.defaults)))
                .collect()
        }
        None => vec![(String::new(), file.defaults.clone())],
    };
    let runs = entries
        .iter()
        .map(|(prefix, fields)| resolve_run(prefix, fields))
        .collect::<Result<Vec<_>, _>>()?;

    for (i, run) in runs.iter().enumerate() {
        if let Some((j, _)) = runs[..i]
            .iter()
            .enumerate()
            .find(|(_, o)| o.table() == run.table() && o.thresholds != run.thresholds)
        {
            return Err(ConfigError::field(
                join(&entries[i].0, "thresholds"),
                format!(
                    "cells of table `{}` must share thresholds (differs from {})",
                    run.table(),
                    if entries[j].0.is_empty() {
                        "top level".to_string()
                    } else {
                        entries[j].0.clone()
                    }
                ),
            ));
        }
    }

    let seeds = file.seeds.unwrap_or(1);
    if seeds == 0 {
        return Err(ConfigError::field("seeds", "ensemble size must be at least 1"));
    }
    let metrics_at = file.metrics_at.unwrap_or_default();
    if let Some(t) = metrics_at.iter().find(|t| !(t.is_finite() && **t > 0.0)) {
        return Err(ConfigError::field(
            "metrics_at",
            format!("{t} is not a positive threshold"),
        ));
    }
    let m = file.metrics.unwrap_or_default();
    let metrics = MetricsOptions {
        node_budget: m.node_budget.unwrap_or(DEFAULT_NODE_BUDGET),
        sample_size: m.sample_size.unwrap_or(DEFAULT_SAMPLE_SIZE),
        seed: m.seed.unwrap_or(0),
    };
    if metrics.sample_size == 0 {
        return Err(ConfigError::field("metrics.sample_size", "must be at least 1"));
    }
    let o = file.output.unwrap_or_default();
    let output = OutputOptions {
        dir: o.dir.unwrap_or_else(|| PathBuf::from("out")),
        format: o.format.unwrap_or_default(),
        traces: o.traces.unwrap_or(false),
        snapshots: o.snapshots.unwrap_or(false),
    };
    Ok(ExperimentConfig {
        name: file.name,
        runs,
        seed: file.seed.unwrap_or(1),
        seeds,
        metrics_at,
        metrics,
        output,
    })
}

fn join(prefix: &str, field: &str) -> String {
    if prefix.is_empty() {
        field.to_string()
    } else {
        format!("{prefix}.{field}")
    }
}

fn resolve_run(prefix: &str, f: &RunFields) -> Result<RunSpec, ConfigError> {
    let at = |field: &str| join(prefix, field);
    let mode = f
        .mode
        .ok_or_else(|| ConfigError::field(at("mode"), "missing (evolutionary, frozen or automaton)"))?;
    let rows = f.rows.ok_or_else(|| ConfigError::field(at("rows"), "missing"))?;
    let cols = f.cols.ok_or_else(|| ConfigError::field(at("cols"), "missing"))?;
    let periodic = f.periodic.unwrap_or(true);
    if !periodic {
        return Err(ConfigError::field(
            at("periodic"),
            "only periodic (torus) lattices keep every node at 8 neighbors",
        ));
    }
    if rows < 3 {
        return Err(ConfigError::field(at("rows"), "a torus needs at least 3 rows"));
    }
    if cols < 3 {
        return Err(ConfigError::field(at("cols"), "a torus needs at least 3 columns"));
    }
    let q = f.q.unwrap_or(MOORE_DEGREE);
    if q != MOORE_DEGREE {
        return Err(ConfigError::field(at("q"), "the Moore lattice fixes q = 8"));
    }
    let distribution = f.distribution.unwrap_or_default();
    distribution
        .validate()
        .map_err(|e| ConfigError::field(at("distribution"), e.to_string()))?;
    let thresholds = f.thresholds.clone().unwrap_or_else(|| DEFAULT_THRESHOLDS.to_vec());
    if let Some(t) = thresholds.iter().find(|t| !(t.is_finite() && **t > 0.0)) {
        return Err(ConfigError::field(
            at("thresholds"),
            format!("{t} is not a positive number"),
        ));
    }
    if let Some(w) = thresholds.windows(2).find(|w| w[1] >= w[0]) {
        return Err(ConfigError::field(
            at("thresholds"),
            format!("must strictly decrease, found {} then {}", w[0], w[1]),
        ));
    }
    let stop_epsilon = f.stop_epsilon.unwrap_or(DEFAULT_STOP_EPSILON);
    if !(stop_epsilon.is_finite() && stop_epsilon > 0.0) {
        return Err(ConfigError::field(at("stop_epsilon"), "must be a positive number"));
    }
    let max_rounds = f.max_rounds.unwrap_or(DEFAULT_MAX_ROUNDS);
    let freeze_at = match (mode, f.freeze_at) {
        (Mode::Frozen, None) => {
            return Err(ConfigError::field(
                at("freeze_at"),
                "frozen mode needs a freeze threshold",
            ))
        }
        (Mode::Frozen, Some(t)) if !(t.is_finite() && t > 0.0) => {
            return Err(ConfigError::field(at("freeze_at"), "must be a positive number"))
        }
        (Mode::Frozen, Some(t)) => Some(t),
        // only meaningful for frozen cells
        (_, _) => None,
    };
    let label = f.label.clone().unwrap_or_else(|| match freeze_at {
        Some(t) => format!("{rows}x{cols} freeze<{}", fmt_threshold(t)),
        None => format!("{rows}x{cols}"),
    });
    Ok(RunSpec {
        label,
        mode,
        rows,
        cols,
        periodic,
        q,
        distribution,
        thresholds,
        stop_epsilon,
        max_rounds,
        freeze_at,
        phase_two_data: f.phase_two_data.unwrap_or_default(),
    })
}

impl ExperimentConfig {
    /// Fully explicit JSON that [`parse_config`] reads back to an equal
    /// config.
    pub fn to_json_value(&self) -> Value {
        let file = ConfigFile {
            defaults: RunFields::default(),
            name: self.name.clone(),
            runs: Some(self.runs.iter().map(RunSpec::as_fields).collect()),
            seed: Some(self.seed),
            seeds: Some(self.seeds),
            metrics_at: Some(self.metrics_at.clone()),
            metrics: Some(MetricsOptionsFile {
                node_budget: Some(self.metrics.node_budget),
                sample_size: Some(self.metrics.sample_size),
                seed: Some(self.metrics.seed),
            }),
            output: Some(OutputOptionsFile {
                dir: Some(self.output.dir.clone()),
                format: Some(self.output.format),
                traces: Some(self.output.traces),
                snapshots: Some(self.output.snapshots),
            }),
        };
        serde_json::to_value(file).expect("config serializes")
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_json_value()).expect("config serializes")
    }
}
