//! Command-line front end: config files, experiment grids and reports.

pub mod config;
pub mod experiment;
pub mod report;

use std::fs;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::analytics::{metrics_report, PathMethod, DEFAULT_NODE_BUDGET, DEFAULT_SAMPLE_SIZE};
use crate::datagen::DistributionSpec;
use crate::dynamics::Mode;
use crate::graph::Topology;

pub use config::{parse_config, ConfigError, ExperimentConfig, OutputFormat, Overrides, RunSpec};
pub use experiment::{run_experiment, ExperimentReport, Outcome};
pub use report::emit_report;

pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_ALL_FAILED: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "exchange-net", version, about = "Averaging on neighbor-exchange networks")]
#[command(args_conflicts_with_subcommands = true)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Option<Command>,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run an experiment grid (the default).
    Run(RunArgs),
    /// Measure a topology snapshot written by an earlier run.
    Metrics(MetricsArgs),
    /// Closed-form diameter and path length of a Moore torus.
    Oracle {
        #[arg(long)]
        rows: usize,
        #[arg(long)]
        cols: usize,
    },
}

#[derive(Debug, Default, Args)]
pub struct RunArgs {
    /// JSON experiment config; flags below override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_parser = parse_mode)]
    pub mode: Option<Mode>,
    #[arg(long)]
    pub rows: Option<usize>,
    #[arg(long)]
    pub cols: Option<usize>,
    /// `uniform`, `uniform:LO,HI`, `quadrant` or `quadrant:V1,V2,V3,V4`.
    #[arg(long, value_parser = parse_distribution)]
    pub distribution: Option<DistributionSpec>,
    /// Base seed of the ensemble.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Ensemble size per cell.
    #[arg(long)]
    pub seeds: Option<usize>,
    #[arg(long, value_parser = parse_float_list)]
    pub thresholds: Option<FloatList>,
    #[arg(long)]
    pub stop_epsilon: Option<f64>,
    #[arg(long)]
    pub max_rounds: Option<usize>,
    #[arg(long)]
    pub freeze_at: Option<f64>,
    #[arg(long, value_parser = parse_float_list)]
    pub metrics_at: Option<FloatList>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<OutputFormat>,
}

#[derive(Debug, Args)]
pub struct MetricsArgs {
    /// Edge list file (`nodes=<N> q=<q>` header, then `source,target` lines).
    pub input: PathBuf,
    /// Traverse from every node regardless of size.
    #[arg(long, conflicts_with = "sample")]
    pub exact: bool,
    /// Traverse from this many sampled sources.
    #[arg(long)]
    pub sample: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = MetricsFormat::Json)]
    pub format: MetricsFormat,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum MetricsFormat {
    Json,
    Csv,
}

/// A comma-separated list of numbers.
#[derive(Debug, Clone, PartialEq)]
pub struct FloatList(pub Vec<f64>);

fn parse_mode(s: &str) -> Result<Mode, String> {
    s.parse()
}

pub fn parse_float_list(s: &str) -> Result<FloatList, String> {
    s.split(',')
        .map(|x| x.trim().parse::<f64>().map_err(|e| format!("`{}`: {e}", x.trim())))
        .collect::<Result<Vec<_>, _>>()
        .map(FloatList)
}

pub fn parse_distribution(s: &str) -> Result<DistributionSpec, String> {
    let (kind, params) = match s.split_once(':') {
        Some((k, p)) => (k, Some(parse_float_list(p)?.0)),
        None => (s, None),
    };
    match (kind, params.as_deref()) {
        ("uniform", None) => Ok(DistributionSpec::default()),
        ("uniform", Some(&[lo, hi])) => Ok(DistributionSpec::Uniform { lo, hi }),
        ("quadrant", None) => Ok(DistributionSpec::quadrant()),
        ("quadrant", Some(&[a, b, c, d])) => Ok(DistributionSpec::Quadrant { values: [a, b, c, d] }),
        ("uniform", Some(_)) => Err("uniform takes two values: uniform:LO,HI".into()),
        ("quadrant", Some(_)) => Err("quadrant takes four values: quadrant:V1,V2,V3,V4".into()),
        (other, _) => Err(format!("unknown distribution `{other}`")),
    }
}

impl RunArgs {
    pub fn overrides(&self) -> Overrides {
        Overrides {
            mode: self.mode,
            rows: self.rows,
            cols: self.cols,
            distribution: self.distribution,
            seed: self.seed,
            seeds: self.seeds,
            thresholds: self.thresholds.clone().map(|l| l.0),
            stop_epsilon: self.stop_epsilon,
            max_rounds: self.max_rounds,
            freeze_at: self.freeze_at,
            metrics_at: self.metrics_at.clone().map(|l| l.0),
            out: self.out.clone(),
            format: self.format,
        }
    }

    /// Loads the config file (if any) and applies the flag overrides.
    pub fn resolve(&self) -> anyhow::Result<ExperimentConfig> {
        let overrides = self.overrides();
        Ok(match &self.config {
            Some(path) => {
                let text = fs::read_to_string(path).map_err(|e| anyhow::anyhow!("reading {}: {e}", path.display()))?;
                config::parse_config_with(&text, &overrides)?
            }
            None => config::config_from_overrides(&overrides)?,
        })
    }
}

fn run_command(args: &RunArgs, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let config = match args.resolve() {
        Ok(c) => c,
        Err(e) => {
            let _ = writeln!(err, "error: {e:#}");
            return EXIT_CONFIG;
        }
    };
    let report = run_experiment(&config);
    for cell in &report.cells {
        let _ = match &cell.error {
            Some(e) => writeln!(err, "cell {} ({}) failed: {e}", cell.id, cell.label),
            None => writeln!(
                out,
                "{:<24} {}",
                format!("{} [{}]", cell.label, cell.spec.mode),
                cell.aggregate
                    .iter()
                    .map(|a| match a.median {
                        Some(m) => format!("b<{:e}:{m}", a.threshold),
                        None => format!("b<{:e}:-", a.threshold),
                    })
                    .collect::<Vec<_>>()
                    .join(" ")
            ),
        };
    }
    match emit_report(&report, config.output.format, &config.output.dir) {
        Ok(paths) => {
            for p in paths {
                let _ = writeln!(out, "wrote {}", p.display());
            }
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_ALL_FAILED;
        }
    }
    report.outcome().exit_code()
}

fn metrics_command(args: &MetricsArgs, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let topology = match fs::File::open(&args.input)
        .map_err(crate::graph::GraphError::from)
        .and_then(|f| Topology::read_edge_list(std::io::BufReader::new(f)))
    {
        Ok(t) => t,
        Err(e) => {
            let _ = writeln!(err, "error: {}: {e}", args.input.display());
            return EXIT_CONFIG;
        }
    };
    let method = match (args.exact, args.sample) {
        (true, _) => PathMethod::Exact,
        (false, Some(sample_size)) => PathMethod::Sampled {
            sample_size,
            seed: args.seed,
        },
        (false, None) => PathMethod::Auto {
            node_budget: DEFAULT_NODE_BUDGET,
            sample_size: DEFAULT_SAMPLE_SIZE,
            seed: args.seed,
        },
    };
    let report = metrics_report(&topology, method);
    let _ = match args.format {
        MetricsFormat::Json => writeln!(
            out,
            "{}",
            serde_json::to_string_pretty(&report).expect("report serializes")
        ),
        MetricsFormat::Csv => writeln!(
            out,
            "{}\n{}",
            crate::analytics::MetricsReport::csv_header(),
            report.csv_row()
        ),
    };
    0
}

/// Runs the parsed command line, writing human output to `out` and
/// diagnostics to `err`. Returns the process exit code.
pub fn execute(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    match &cli.command {
        None => run_command(&cli.run, out, err),
        Some(Command::Run(args)) => run_command(args, out, err),
        Some(Command::Metrics(args)) => metrics_command(args, out, err),
        Some(Command::Oracle { rows, cols }) => match crate::analytics::lattice_metrics_oracle(*rows, *cols) {
            Ok((d, cpl)) => {
                let _ = writeln!(out, "diameter={d} cpl={cpl:.6}");
                0
            }
            Err(e) => {
                let _ = writeln!(err, "error: {e}");
                EXIT_CONFIG
            }
        },
    }
}
