//! Experiment specification: JSON config file plus command-line overrides.

use std::path::{Path, PathBuf};

use clap::ValueEnum;
use serde::{Deserialize, Serialize};

use rehearse_core::data::{LabelOrder, StreamConfig};
use rehearse_core::minout::{ClipVariant, FitConfig, Init};
use rehearse_core::training::{Method, RunConfig};

use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum MethodArg {
    Conditional,
    Random,
    None,
    #[value(name = "mlp_sgd")]
    MlpSgd,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Conditional => Method::Conditional,
            MethodArg::Random => Method::Random,
            MethodArg::None => Method::None,
            MethodArg::MlpSgd => Method::MlpSgd,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum VariantArg {
    #[value(name = "sigmoid_minout")]
    SigmoidMinout,
    #[value(name = "hard_maxout")]
    HardMaxout,
}

impl From<VariantArg> for ClipVariant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::SigmoidMinout => ClipVariant::SigmoidMinout,
            VariantArg::HardMaxout => ClipVariant::HardMaxoutClip0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum OrderArg {
    Ascending,
    Descending,
}

impl From<OrderArg> for LabelOrder {
    fn from(o: OrderArg) -> Self {
        match o {
            OrderArg::Ascending => LabelOrder::Ascending,
            OrderArg::Descending => LabelOrder::Descending,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum InitArg {
    Zeros,
    Uniform,
}

/// Default SGD step size for the MLP baseline.
pub const MLP_DEFAULT_LR: f64 = 0.01;

/// Everything needed to reproduce one run. Serialized as the run manifest,
/// which can be fed back through `--config`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentSpec {
    pub data_dir: Option<PathBuf>,
    pub out_dir: PathBuf,
    pub method: MethodArg,
    pub variant: VariantArg,
    pub per_class: usize,
    pub order: OrderArg,
    pub seed: u64,
    pub eval_every: usize,
    pub max_steps: usize,
    /// Defaults per variant (0.5 sigmoid, 0.05 hard) or 0.01 for the MLP.
    pub lr: Option<f64>,
    pub stop_loss: f64,
    pub tau: f64,
    pub neurons: usize,
    pub init: InitArg,
    pub init_scale: f64,
    /// Random rehearsal sample size; defaults to `per_class`.
    pub rehearsal_budget: Option<usize>,
    pub outer_rounds: usize,
    pub debug_checks: bool,
    /// MLP only: train on a shuffled copy of the stream.
    pub shuffle: bool,
    pub mlp_hidden: usize,
    /// Evaluate on the first N test images only.
    pub test_limit: Option<usize>,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        Self {
            data_dir: None,
            out_dir: PathBuf::from("out"),
            method: MethodArg::Conditional,
            variant: VariantArg::SigmoidMinout,
            per_class: 100,
            order: OrderArg::Ascending,
            seed: 1,
            eval_every: 1,
            max_steps: 100,
            lr: None,
            stop_loss: 0.1,
            tau: 0.1,
            neurons: 50,
            init: InitArg::Zeros,
            init_scale: 0.01,
            rehearsal_budget: None,
            outer_rounds: 25,
            debug_checks: false,
            shuffle: false,
            mlp_hidden: 128,
            test_limit: None,
        }
    }
}

impl ExperimentSpec {
    pub fn from_json_str(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| HarnessError::Usage(format!("config: {e}")))
    }

    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        Self::from_json_str(&text)
    }

    /// Fill every defaulted knob and check ranges.
    pub fn resolve(mut self) -> Result<Self> {
        if self.lr.is_none() {
            self.lr = Some(match self.method {
                MethodArg::MlpSgd => MLP_DEFAULT_LR,
                _ => ClipVariant::from(self.variant).default_lr(),
            });
        }
        if self.rehearsal_budget.is_none() {
            self.rehearsal_budget = Some(self.per_class);
        }
        self.validate()?;
        Ok(self)
    }

    fn validate(&self) -> Result<()> {
        let usage = |m: String| Err(HarnessError::Usage(m));
        if self.per_class == 0 {
            return usage("per_class must be >= 1".into());
        }
        if self.eval_every == 0 {
            return usage("eval_every must be >= 1".into());
        }
        if self.max_steps == 0 {
            return usage("max_steps must be >= 1".into());
        }
        if self.outer_rounds == 0 {
            return usage("outer_rounds must be >= 1".into());
        }
        if self.neurons == 0 || self.mlp_hidden == 0 {
            return usage("neurons and mlp_hidden must be >= 1".into());
        }
        if let Some(lr) = self.lr {
            if !(lr > 0.0 && lr.is_finite()) {
                return usage(format!("lr must be > 0, got {lr}"));
            }
        }
        if self.stop_loss.is_nan() || self.stop_loss <= 0.0 {
            return usage(format!("stop_loss must be > 0, got {}", self.stop_loss));
        }
        if !(self.tau > 0.0 && self.tau < 1.0) {
            return usage(format!("tau must lie in (0,1), got {}", self.tau));
        }
        if self.init_scale.is_nan() || self.init_scale < 0.0 {
            return usage(format!("init_scale must be >= 0, got {}", self.init_scale));
        }
        if self.test_limit == Some(0) {
            return usage("test_limit must be >= 1".into());
        }
        Ok(())
    }

    pub fn data_dir(&self) -> Result<&Path> {
        self.data_dir
            .as_deref()
            .ok_or_else(|| HarnessError::Usage("missing data directory (--data-dir)".into()))
    }

    pub fn stream_config(&self) -> StreamConfig {
        StreamConfig {
            per_class: self.per_class,
            order: self.order.into(),
            seed: self.seed,
        }
    }

    pub fn init(&self) -> Init {
        match self.init {
            InitArg::Zeros => Init::Zeros,
            InitArg::Uniform => Init::Uniform {
                scale: self.init_scale,
            },
        }
    }

    /// Core training configuration. Call on a resolved spec.
    pub fn run_config(&self) -> RunConfig {
        let fit = FitConfig {
            lr: self.lr.expect("resolved spec"),
            stop_loss: self.stop_loss,
            max_steps: self.max_steps,
        };
        RunConfig {
            method: self.method.into(),
            fit,
            rehearsal_budget: self.rehearsal_budget.expect("resolved spec"),
            outer_rounds: self.outer_rounds,
            eval_every: self.eval_every,
            seed: self.seed,
            debug_checks: self.debug_checks,
            shuffle: self.shuffle,
        }
    }
}
