//! Command-line surface. Flags override values from `--config`.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::error::{HarnessError, Result};
use crate::spec::{ExperimentSpec, InitArg, MethodArg, OrderArg, VariantArg};

#[derive(Debug, Parser)]
#[command(name = "rehearse", version, about = "Conditional rehearsal experiments on label-ordered MNIST")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train one configuration and write metrics.csv, summary.json, manifest.json.
    Run(SpecArgs),
    /// Render metrics CSVs as an SVG line chart.
    Plot(PlotArgs),
    /// Run the property suites; with --data-dir also check the index on real data.
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct SpecArgs {
    /// JSON config; any flag below overrides the matching key.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub method: Option<MethodArg>,
    #[arg(long, value_enum)]
    pub variant: Option<VariantArg>,
    #[arg(long)]
    pub per_class: Option<usize>,
    #[arg(long, value_enum)]
    pub order: Option<OrderArg>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Directory holding the four uncompressed MNIST IDX files.
    #[arg(long)]
    pub data_dir: Option<PathBuf>,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    #[arg(long)]
    pub eval_every: Option<usize>,
    #[arg(long)]
    pub max_steps: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub stop_loss: Option<f64>,
    #[arg(long)]
    pub tau: Option<f64>,
    #[arg(long)]
    pub neurons: Option<usize>,
    #[arg(long, value_enum)]
    pub init: Option<InitArg>,
    #[arg(long)]
    pub init_scale: Option<f64>,
    #[arg(long)]
    pub rehearsal_budget: Option<usize>,
    #[arg(long)]
    pub outer_rounds: Option<usize>,
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub debug_checks: Option<bool>,
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub shuffle: Option<bool>,
    #[arg(long)]
    pub mlp_hidden: Option<usize>,
    #[arg(long)]
    pub test_limit: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct PlotArgs {
    /// Metrics CSV files, one series each.
    #[arg(required = true)]
    pub csv: Vec<PathBuf>,
    /// Legend label per CSV, in order.
    #[arg(long = "label")]
    pub labels: Vec<String>,
    /// Column plotted against step.
    #[arg(long, default_value = "test_acc")]
    pub column: String,
    #[arg(long)]
    pub title: Option<String>,
    #[arg(long, short)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    /// Seed for the randomized suites.
    #[arg(long, default_value_t = 1)]
    pub suite_seed: u64,
    #[command(flatten)]
    pub spec: SpecArgs,
}

macro_rules! override_fields {
    ($spec:ident, $args:ident; $($field:ident),*) => {
        $(if let Some(v) = $args.$field.clone() { $spec.$field = v; })*
    };
}

impl SpecArgs {
    /// Config file (if any), then flags, then defaults; validated.
    pub fn to_spec(&self) -> Result<ExperimentSpec> {
        let mut spec = match &self.config {
            Some(path) => ExperimentSpec::from_json_file(path)?,
            None => ExperimentSpec::default(),
        };
        override_fields!(spec, self;
            method, variant, per_class, order, seed, out_dir, eval_every, max_steps,
            stop_loss, tau, neurons, init, init_scale, outer_rounds, debug_checks,
            shuffle, mlp_hidden);
        if self.data_dir.is_some() {
            spec.data_dir = self.data_dir.clone();
        }
        if self.lr.is_some() {
            spec.lr = self.lr;
        }
        if self.rehearsal_budget.is_some() {
            spec.rehearsal_budget = self.rehearsal_budget;
        }
        if self.test_limit.is_some() {
            spec.test_limit = self.test_limit;
        }
        spec.resolve()
    }

    /// As [`to_spec`](Self::to_spec) and additionally require a data directory.
    pub fn to_run_spec(&self) -> Result<ExperimentSpec> {
        let spec = self.to_spec()?;
        spec.data_dir()?;
        Ok(spec)
    }

    /// True when any option was given, i.e. the caller wants a data-backed check.
    pub fn wants_data(&self) -> bool {
        self.data_dir.is_some() || self.config.is_some()
    }
}

pub fn parse_cli<I, T>(argv: I) -> std::result::Result<Cli, clap::Error>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    Cli::try_parse_from(argv)
}

/// Parse and turn clap failures into usage errors (help output included).
pub fn parse_spec(argv: &[&str]) -> Result<ExperimentSpec> {
    let cli = parse_cli(argv).map_err(|e| HarnessError::Usage(e.to_string()))?;
    match cli.command {
        Command::Run(args) => args.to_run_spec(),
        Command::Verify(args) => args.spec.to_spec(),
        Command::Plot(_) => Err(HarnessError::Usage("plot takes no experiment spec".into())),
    }
}
