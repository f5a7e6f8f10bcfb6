//! Command-line front end for tcdkit: reads a TOML run configuration and
//! emits JSON reports or plot-ready CSV.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use tcdkit::bounds::ThresholdRule;

use crate::commands::Overrides;
use crate::config::RunConfig;
pub use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "tcdkit",
    version,
    about = "Transient change detection bounds, simulation and integrity availability"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Thresholds meeting each false-alarm requirement (JSON)
    Threshold(Common),
    /// Analytic false-alarm and missed-detection bounds (JSON)
    Bounds(Common),
    /// ROC curve over the alpha grid, simulated when runs > 0 (CSV)
    Roc(Common),
    /// Monte-Carlo false alarm and missed detection (JSON)
    Simulate(Common),
    /// Run the detectors over a sample stream (JSON)
    Detect(DetectArgs),
    /// Integrity availability verdicts (JSON)
    Availability(Common),
}

#[derive(Debug, Args)]
pub struct Common {
    /// Run configuration (TOML)
    #[arg(long)]
    pub config: PathBuf,
    /// Write the report here instead of stdout
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Override montecarlo.seed
    #[arg(long)]
    pub seed: Option<u64>,
    /// Override montecarlo.runs
    #[arg(long)]
    pub runs: Option<u64>,
    /// Override detectors.threshold_rule
    #[arg(long, value_parser = parse_rule)]
    pub threshold_rule: Option<ThresholdRule>,
}

#[derive(Debug, Args)]
pub struct DetectArgs {
    #[command(flatten)]
    pub common: Common,
    /// Sample stream, CSV with header `n,value`
    #[arg(long)]
    pub input: PathBuf,
    /// Metric the stream belongs to; may be omitted when only one is configured
    #[arg(long)]
    pub metric: Option<String>,
}

fn parse_rule(s: &str) -> Result<ThresholdRule, String> {
    s.parse().map_err(|e: tcdkit::Error| e.to_string())
}

impl Common {
    fn load(&self) -> Result<RunConfig, CliError> {
        let mut config = RunConfig::load(&self.config)?;
        Overrides {
            seed: self.seed,
            runs: self.runs,
            rule: self.threshold_rule,
        }
        .apply(&mut config);
        Ok(config)
    }
}

/// Execute a parsed command, returning the rendered report and where it goes.
pub fn render(command: &Command) -> Result<(String, Option<PathBuf>), CliError> {
    let (text, common) = match command {
        Command::Threshold(c) => (
            output::json("threshold", &commands::cmd_threshold(&c.load()?)?)?,
            c,
        ),
        Command::Bounds(c) => (
            output::json("bounds", &commands::cmd_bounds(&c.load()?)?)?,
            c,
        ),
        Command::Roc(c) => {
            let config = c.load()?;
            let rows = commands::cmd_roc(&config)?;
            (output::roc_csv(&rows, config.runs, config.seed)?, c)
        }
        Command::Simulate(c) => (
            output::json("simulate", &commands::cmd_simulate(&c.load()?)?)?,
            c,
        ),
        Command::Availability(c) => (
            output::json("availability", &commands::cmd_availability(&c.load()?)?)?,
            c,
        ),
        Command::Detect(d) => {
            let config = d.common.load()?;
            let metric = match (&d.metric, config.metrics.as_slice()) {
                (Some(name), _) => config.metric(name)?,
                (None, [only]) => only,
                (None, _) => {
                    return Err(CliError::Config(
                        "several metrics configured; choose one with --metric".into(),
                    ))
                }
            };
            let samples = commands::read_stream(&d.input)?;
            let stream = d
                .input
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
            let events = commands::cmd_detect(&config, metric, &stream, &samples)?;
            (output::json("detect", &events)?, &d.common)
        }
    };
    Ok((text, common.out.clone()))
}

/// Run a command end to end, writing its report.
pub fn run(cli: &Cli) -> Result<(), CliError> {
    let (text, out) = render(&cli.command)?;
    match out {
        Some(path) => std::fs::write(&path, text).map_err(|source| CliError::Io { path, source }),
        None => {
            use std::io::Write;
            std::io::stdout()
                .write_all(text.as_bytes())
                .map_err(|source| CliError::Io {
                    path: "<stdout>".into(),
                    source,
                })
        }
    }
}
