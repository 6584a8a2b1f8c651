//! Experiment runner behind the `twinshift` binary.

pub mod config;
pub mod output;
pub mod runner;
pub mod summary;

use std::io::Write;
use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Parser;

pub use config::{load_config, parse_config, Dims, ExperimentConfig, Scenario};
pub use output::{emit, read_records, Format, MetricRecord, COLUMNS, SCHEMA_VERSION};
pub use runner::run_experiment;
pub use summary::{summarize, SummaryRow};

/// Monte-Carlo sweeps for twin-resolution hybrid precoding.
#[derive(Debug, Parser)]
#[command(name = "twinshift", version)]
pub struct Cli {
    pub scenario: Scenario,
    /// TOML experiment file.
    #[arg(long)]
    pub config: PathBuf,
    /// Master seed; overrides the config file.
    #[arg(long, env = "TWINSHIFT_SEED")]
    pub seed: Option<u64>,
    #[arg(long)]
    pub trials: Option<usize>,
    /// Output file; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Start from the full-size array defaults instead of the desk-scale ones.
    #[arg(long)]
    pub paper_scale: bool,
    /// Record design wall time per row (makes output non-reproducible).
    #[arg(long)]
    pub timing: bool,
    /// Also write per-point means and bootstrap intervals as CSV.
    #[arg(long)]
    pub summary: Option<PathBuf>,
    /// Suppress the summary table on stderr.
    #[arg(long, short)]
    pub quiet: bool,
}

impl Cli {
    pub fn resolve_config(&self) -> Result<ExperimentConfig> {
        let mut cfg = load_config(&self.config, self.paper_scale)?;
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(trials) = self.trials {
            cfg.trials = trials;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

pub fn run(cli: &Cli) -> Result<()> {
    let cfg = cli.resolve_config()?;
    let records = run_experiment(cli.scenario, &cfg, cli.timing)?;
    emit(&records, cli.out.as_deref(), cli.format)?;
    if cli.quiet && cli.summary.is_none() {
        return Ok(());
    }
    let rows = summarize(&records, cfg.seed);
    if let Some(path) = &cli.summary {
        let file = std::fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
        summary::write_summary_csv(&rows, file).with_context(|| format!("writing {}", path.display()))?;
    }
    if !cli.quiet {
        let mut err = std::io::stderr().lock();
        writeln!(err, "{} seed={} trials={} rows={}", cli.scenario, cfg.seed, cfg.trials, records.len())?;
        summary::write_table(&rows, err)?;
    }
    Ok(())
}
