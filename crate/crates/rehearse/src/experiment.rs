//! One experiment end to end: data, stream, training, artifacts.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use rehearse_core::data::{build_mnist_ol, Dataset, Example, NUM_CLASSES};
use rehearse_core::interference::{ExampleStore, InterferenceIndex};
use rehearse_core::math::Rng;
use rehearse_core::minout::MinoutModel;
use rehearse_core::mlp::MlpParams;
use rehearse_core::training::{train_minout, train_mlp_sgd, Clock, EvalSets, Method, RunOutcome};

use crate::error::{HarnessError, Result};
use crate::idx::{load_mnist_dir, Mnist};
use crate::metrics::metrics_csv_string;
use crate::spec::{ExperimentSpec, MethodArg};

pub const METRICS_FILE: &str = "metrics.csv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const MANIFEST_FILE: &str = "manifest.json";

struct WallClock(Instant);

impl Clock for WallClock {
    fn elapsed_secs(&self) -> f64 {
        self.0.elapsed().as_secs_f64()
    }
}

/// Final numbers of a run, written as `summary.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub method: MethodArg,
    pub seed: u64,
    pub stream_len: usize,
    pub train_acc_final: f64,
    pub test_acc_final: f64,
    /// Mean over stream steps of the per-unit rehearsal count.
    pub rehearsed_mean: f64,
    pub gradient_steps: usize,
    /// Stream examples whose alternation hit the round cap.
    pub round_cap_hits: usize,
    /// Single-example fits that hit `max_steps`.
    pub fit_cap_hits: usize,
    pub index_checks: usize,
    pub index_mismatches: usize,
    pub wall_clock_secs: f64,
}

#[derive(Debug, Clone)]
pub struct RunArtifacts {
    pub spec: ExperimentSpec,
    pub outcome: RunOutcome,
    pub summary: Summary,
}

impl RunArtifacts {
    pub fn metrics_csv(&self) -> String {
        metrics_csv_string(&self.outcome.records)
    }
}

/// Train on already loaded data. `spec` must be resolved.
pub fn execute_on(spec: &ExperimentSpec, train: &Dataset, test: &Dataset) -> Result<RunArtifacts> {
    let stream = build_mnist_ol(train, &spec.stream_config())?;
    let limit = spec.test_limit.unwrap_or(test.len()).min(test.len());
    let test_set: Vec<Example> = (0..limit).map(|i| test.example(i)).collect();
    let eval = EvalSets {
        train: &stream,
        test: &test_set,
    };
    let cfg = spec.run_config();
    let clock = WallClock(Instant::now());
    // Parameter init gets its own stream so it does not share draws with
    // rehearsal sampling.
    let mut init_rng = Rng::new(spec.seed).fork();
    let outcome = match Method::from(spec.method) {
        Method::MlpSgd => {
            let mut mlp = MlpParams::new(train.dim(), spec.mlp_hidden, NUM_CLASSES, false, &mut init_rng)?;
            train_mlp_sgd(&stream, &mut mlp, &cfg, eval, &clock)?
        }
        _ => {
            let mut model = MinoutModel::new(
                NUM_CLASSES,
                train.dim(),
                spec.neurons,
                spec.variant.into(),
                spec.tau,
                spec.init(),
                &mut init_rng,
            )?;
            let mut store = ExampleStore::new();
            let mut indices: Vec<InterferenceIndex> =
                (0..NUM_CLASSES).map(|_| InterferenceIndex::new(spec.neurons)).collect();
            train_minout(&stream, &mut model, &mut store, &mut indices, &cfg, eval, &clock, &mut ())?
        }
    };
    let last = outcome
        .last()
        .ok_or_else(|| HarnessError::Data("run produced no evaluation point".into()))?;
    let stats = &outcome.stats;
    let summary = Summary {
        method: spec.method,
        seed: spec.seed,
        stream_len: stats.stream_len,
        train_acc_final: last.train_acc,
        test_acc_final: last.test_acc,
        rehearsed_mean: stats.mean_rehearsed(),
        gradient_steps: stats.gradient_steps,
        round_cap_hits: stats.round_cap_hits,
        fit_cap_hits: stats.fit_cap_hits,
        index_checks: stats.index_checks,
        index_mismatches: stats.index_mismatches,
        wall_clock_secs: clock.elapsed_secs(),
    };
    Ok(RunArtifacts {
        spec: spec.clone(),
        outcome,
        summary,
    })
}

/// Resolve, load data and train without touching the output directory.
pub fn execute(spec: &ExperimentSpec) -> Result<RunArtifacts> {
    let spec = spec.clone().resolve()?;
    let Mnist { train, test } = load_mnist_dir(spec.data_dir()?)?;
    execute_on(&spec, &train, &test)
}

/// Write the three artifacts; on any failure remove whatever was written.
pub fn write_artifacts(out_dir: &Path, run: &RunArtifacts) -> Result<()> {
    std::fs::create_dir_all(out_dir).map_err(|e| HarnessError::io(out_dir, e))?;
    let files: [(PathBuf, String); 3] = [
        (out_dir.join(METRICS_FILE), run.metrics_csv()),
        (out_dir.join(SUMMARY_FILE), serde_json::to_string_pretty(&run.summary)? + "\n"),
        (out_dir.join(MANIFEST_FILE), serde_json::to_string_pretty(&run.spec)? + "\n"),
    ];
    let mut written: Vec<&Path> = Vec::new();
    for (path, text) in &files {
        if let Err(e) = std::fs::write(path, text) {
            for p in written.iter().copied().chain([path.as_path()]) {
                let _ = std::fs::remove_file(p);
            }
            return Err(HarnessError::io(path, e));
        }
        written.push(path);
    }
    Ok(())
}

/// `run` subcommand: train and write artifacts into `spec.out_dir`.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<Summary> {
    let run = execute(spec)?;
    write_artifacts(&run.spec.out_dir, &run)?;
    Ok(run.summary)
}
