//! Online training over a label-ordered stream.
//!
//! Each stream example is learned once, in order. Before it is learned, every
//! unit decides which stored examples to rehearse alongside it:
//!
//! * conditional: the interfered set `s1 ∪ s2` from that unit's index,
//! * random: one uniform sample of the whole store, shared by all units,
//! * none: nothing.
//!
//! Learning then alternates between fitting the new example and fitting the
//! rehearsal set on every unit, each under the per-unit stop loss, until a
//! full round makes no step or the round cap is reached.

use alloc::vec;
use alloc::vec::Vec;

use crate::data::{Example, NUM_CLASSES};
use crate::error::{Error, Result};
use crate::interference::{partition_bruteforce_at, ExampleId, ExampleStore, InterferenceIndex};
use crate::math::Rng;
use crate::minout::{FitConfig, MinoutModel, TouchedNeurons};
use crate::mlp::MlpParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Conditional,
    Random,
    None,
    MlpSgd,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Conditional, Method::Random, Method::None, Method::MlpSgd];

    pub fn name(self) -> &'static str {
        match self {
            Method::Conditional => "conditional",
            Method::Random => "random",
            Method::None => "none",
            Method::MlpSgd => "mlp_sgd",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|m| m.name() == name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunConfig {
    pub method: Method,
    pub fit: FitConfig,
    /// Sample size for random rehearsal.
    pub rehearsal_budget: usize,
    /// Cap on new-example / rehearsal alternation rounds per stream example.
    pub outer_rounds: usize,
    pub eval_every: usize,
    pub seed: u64,
    /// Compare the index against the brute-force partition at every step.
    pub debug_checks: bool,
    /// Shuffle the stream before MLP training (the i.i.d. control).
    pub shuffle: bool,
}

impl RunConfig {
    pub fn new(method: Method, fit: FitConfig) -> Self {
        Self {
            method,
            fit,
            rehearsal_budget: 100,
            outer_rounds: 25,
            eval_every: 1,
            seed: 0,
            debug_checks: false,
            shuffle: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.fit.validate()?;
        if self.outer_rounds == 0 {
            return Err(Error::InvalidArgument("outer_rounds must be >= 1".into()));
        }
        if self.eval_every == 0 {
            return Err(Error::InvalidArgument("eval_every must be >= 1".into()));
        }
        Ok(())
    }
}

/// One evaluation point.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRecord {
    /// Number of stream examples learned so far.
    pub step: usize,
    pub train_acc: f64,
    pub test_acc: f64,
    /// Per unit: examples rehearsed for this stream example.
    pub rehearsed: Vec<usize>,
    /// Per unit: gradient steps spent on this stream example.
    pub fit_steps: Vec<usize>,
    pub wall_clock_secs: f64,
}

impl MetricsRecord {
    pub fn rehearsed_mean(&self) -> f64 {
        if self.rehearsed.is_empty() {
            return 0.0;
        }
        self.rehearsed.iter().sum::<usize>() as f64 / self.rehearsed.len() as f64
    }

    pub fn rehearsed_min(&self) -> usize {
        self.rehearsed.iter().copied().min().unwrap_or(0)
    }

    pub fn rehearsed_max(&self) -> usize {
        self.rehearsed.iter().copied().max().unwrap_or(0)
    }

    pub fn fit_steps_total(&self) -> usize {
        self.fit_steps.iter().sum()
    }
}

/// Counters accumulated over a whole run, not just evaluation points.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunStats {
    pub stream_len: usize,
    /// Sum over stream steps of the per-unit mean rehearsal count.
    pub rehearsed_mean_sum: f64,
    pub gradient_steps: usize,
    /// Stream examples whose alternation hit `outer_rounds`.
    pub round_cap_hits: usize,
    /// `fit_example` calls that ran out of steps.
    pub fit_cap_hits: usize,
    /// Brute-force comparisons performed (debug checks only).
    pub index_checks: usize,
    pub index_mismatches: usize,
}

impl RunStats {
    /// Mean per-unit rehearsal count over all stream steps.
    pub fn mean_rehearsed(&self) -> f64 {
        if self.stream_len == 0 {
            0.0
        } else {
            self.rehearsed_mean_sum / self.stream_len as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub records: Vec<MetricsRecord>,
    pub stats: RunStats,
}

impl RunOutcome {
    pub fn last(&self) -> Option<&MetricsRecord> {
        self.records.last()
    }
}

/// Datasets accuracy is measured on at each evaluation point.
#[derive(Debug, Clone, Copy)]
pub struct EvalSets<'a> {
    pub train: &'a [Example],
    pub test: &'a [Example],
}

/// Source of wall-clock time; the core crate has none of its own.
pub trait Clock {
    fn elapsed_secs(&self) -> f64;
}

/// Clock that always reads zero.
pub struct NoClock;

impl Clock for NoClock {
    fn elapsed_secs(&self) -> f64 {
        0.0
    }
}

/// What a gradient computation is about to read.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitSubject {
    New,
    Stored(ExampleId),
}

/// Hooks into the training loop, mainly for tests and diagnostics.
pub trait Observer {
    fn before_example(&mut self, _step: usize, _model: &MinoutModel, _store: &ExampleStore) {}
    /// Called with each unit's rehearsal set once it is fixed.
    fn rehearsal_set(&mut self, _step: usize, _unit: usize, _ids: &[ExampleId]) {}
    fn on_fit(&mut self, _step: usize, _unit: usize, _subject: FitSubject) {}
    fn after_example(&mut self, _step: usize, _model: &MinoutModel, _store: &ExampleStore) {}
}

impl Observer for () {}

/// Anything that maps an input to a label.
pub trait Classifier {
    fn classify(&self, x: &[f64]) -> Result<usize>;
}

impl Classifier for MinoutModel {
    fn classify(&self, x: &[f64]) -> Result<usize> {
        self.predict(x)
    }
}

impl Classifier for MlpParams {
    fn classify(&self, x: &[f64]) -> Result<usize> {
        self.predict(x)
    }
}

/// Fraction of `examples` classified correctly.
pub fn evaluate<C: Classifier + ?Sized>(model: &C, examples: &[Example]) -> Result<f64> {
    if examples.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut correct = 0usize;
    for ex in examples {
        if model.classify(&ex.features)? == ex.label as usize {
            correct += 1;
        }
    }
    Ok(correct as f64 / examples.len() as f64)
}

fn target(unit: usize, label: u8) -> f64 {
    if unit == label as usize {
        1.0
    } else {
        0.0
    }
}

fn is_eval_step(step: usize, total: usize, every: usize) -> bool {
    step.is_multiple_of(every) || step == total
}

/// Train a minout model on `stream` with the method named in `cfg`.
///
/// `store` and `indices` carry history between calls; pass empty ones for a
/// fresh run. `indices` must hold one index per unit (only conditional
/// rehearsal reads them, but all methods keep them current so a run can
/// switch method midway).
#[allow(clippy::too_many_arguments)]
pub fn train_minout(
    stream: &[Example],
    model: &mut MinoutModel,
    store: &mut ExampleStore,
    indices: &mut [InterferenceIndex],
    cfg: &RunConfig,
    eval: EvalSets<'_>,
    clock: &dyn Clock,
    observer: &mut dyn Observer,
) -> Result<RunOutcome> {
    cfg.validate()?;
    if cfg.method == Method::MlpSgd {
        return Err(Error::InvalidArgument("mlp_sgd trains an MlpParams, use train_mlp_sgd".into()));
    }
    let units = model.num_units();
    if indices.len() != units {
        return Err(Error::InvalidArgument(alloc::format!(
            "{} indices for {units} units",
            indices.len()
        )));
    }
    if stream.iter().any(|ex| ex.label as usize >= units) {
        return Err(Error::InvalidArgument("stream label without a unit".into()));
    }
    let (variant, tau, k) = (model.variant(), model.tau(), model.neurons());
    let mut rng = Rng::new(cfg.seed);
    let mut stats = RunStats {
        stream_len: stream.len(),
        ..RunStats::default()
    };
    let mut records = Vec::new();
    let mut sets: Vec<Vec<ExampleId>> = vec![Vec::new(); units];
    let mut touched: Vec<TouchedNeurons> = (0..units).map(|_| TouchedNeurons::new(k)).collect();

    for (t, ex) in stream.iter().enumerate() {
        let step = t + 1;
        observer.before_example(step, model, store);

        // Rehearsal sets are frozen before any update for this example.
        match cfg.method {
            Method::Conditional => {
                for (i, set) in sets.iter_mut().enumerate() {
                    let unit = model.unit(i);
                    let g = unit.select_neuron(&ex.features, variant)?;
                    *set = indices[i].query(g)?;
                    if cfg.debug_checks {
                        let oracle = partition_bruteforce_at(store, unit, g, variant, tau)?;
                        stats.index_checks += 1;
                        if indices[i].partition(g)? != oracle || *set != oracle.interfered() {
                            stats.index_mismatches += 1;
                        }
                    }
                }
            }
            Method::Random => {
                let sample = rng.sample_indices(store.len(), cfg.rehearsal_budget);
                sets.iter_mut().for_each(|s| s.clone_from(&sample));
            }
            Method::None => sets.iter_mut().for_each(Vec::clear),
            Method::MlpSgd => unreachable!(),
        }
        for (i, set) in sets.iter().enumerate() {
            observer.rehearsal_set(step, i, set);
        }
        let rehearsed: Vec<usize> = sets.iter().map(Vec::len).collect();
        stats.rehearsed_mean_sum += rehearsed.iter().sum::<usize>() as f64 / units as f64;

        let mut fit_steps = vec![0usize; units];
        touched.iter_mut().for_each(TouchedNeurons::clear);
        let mut settled = false;
        for _ in 0..cfg.outer_rounds {
            let mut moved = false;
            for i in 0..units {
                let unit = model.unit_mut(i);
                observer.on_fit(step, i, FitSubject::New);
                let out = unit.fit_example(&ex.features, target(i, ex.label), &cfg.fit, variant, &mut touched[i])?;
                fit_steps[i] += out.steps;
                moved |= out.steps > 0;
                stats.fit_cap_hits += usize::from(!out.converged);
                for &id in &sets[i] {
                    let old = store.get(id).expect("rehearsal id in store");
                    observer.on_fit(step, i, FitSubject::Stored(id));
                    let out = unit.fit_example(&old.features, target(i, old.label), &cfg.fit, variant, &mut touched[i])?;
                    fit_steps[i] += out.steps;
                    moved |= out.steps > 0;
                    stats.fit_cap_hits += usize::from(!out.converged);
                }
            }
            if !moved {
                settled = true;
                break;
            }
        }
        stats.round_cap_hits += usize::from(!settled);
        stats.gradient_steps += fit_steps.iter().sum::<usize>();

        for i in 0..units {
            indices[i].refresh(store, model.unit(i), &touched[i], variant, tau)?;
        }
        let id = store.push(ex.clone());
        for (i, index) in indices.iter_mut().enumerate() {
            index.insert(id, &model.unit(i).clip_status(&ex.features, variant, tau)?)?;
        }
        observer.after_example(step, model, store);

        if is_eval_step(step, stream.len(), cfg.eval_every) {
            records.push(MetricsRecord {
                step,
                train_acc: evaluate(model, eval.train)?,
                test_acc: evaluate(model, eval.test)?,
                rehearsed,
                fit_steps,
                wall_clock_secs: clock.elapsed_secs(),
            });
        }
    }
    Ok(RunOutcome { records, stats })
}

/// Fresh-state conditional rehearsal run.
pub fn train_conditional(
    stream: &[Example],
    model: &mut MinoutModel,
    cfg: &RunConfig,
    eval: EvalSets<'_>,
) -> Result<RunOutcome> {
    let cfg = RunConfig {
        method: Method::Conditional,
        ..*cfg
    };
    fresh_run(stream, model, &cfg, eval)
}

/// Fresh-state random rehearsal run.
pub fn train_random(stream: &[Example], model: &mut MinoutModel, cfg: &RunConfig, eval: EvalSets<'_>) -> Result<RunOutcome> {
    let cfg = RunConfig {
        method: Method::Random,
        ..*cfg
    };
    fresh_run(stream, model, &cfg, eval)
}

/// Fresh-state run without rehearsal.
pub fn train_none(stream: &[Example], model: &mut MinoutModel, cfg: &RunConfig, eval: EvalSets<'_>) -> Result<RunOutcome> {
    let cfg = RunConfig {
        method: Method::None,
        ..*cfg
    };
    fresh_run(stream, model, &cfg, eval)
}

fn fresh_run(stream: &[Example], model: &mut MinoutModel, cfg: &RunConfig, eval: EvalSets<'_>) -> Result<RunOutcome> {
    let mut store = ExampleStore::new();
    let mut indices: Vec<InterferenceIndex> = (0..model.num_units())
        .map(|_| InterferenceIndex::new(model.neurons()))
        .collect();
    train_minout(stream, model, &mut store, &mut indices, cfg, eval, &NoClock, &mut ())
}

/// Per-example SGD on the MLP, in stream order or shuffled when
/// `cfg.shuffle` is set. Uses `cfg.fit.lr` as the step size.
pub fn train_mlp_sgd(
    stream: &[Example],
    mlp: &mut MlpParams,
    cfg: &RunConfig,
    eval: EvalSets<'_>,
    clock: &dyn Clock,
) -> Result<RunOutcome> {
    cfg.validate()?;
    let mut order: Vec<usize> = (0..stream.len()).collect();
    if cfg.shuffle {
        Rng::new(cfg.seed).shuffle(&mut order);
    }
    let mut records = Vec::new();
    for (t, &i) in order.iter().enumerate() {
        let step = t + 1;
        let ex = &stream[i];
        mlp.sgd_step(&ex.features, ex.label as usize, cfg.fit.lr)?;
        if is_eval_step(step, stream.len(), cfg.eval_every) {
            records.push(MetricsRecord {
                step,
                train_acc: evaluate(mlp, eval.train)?,
                test_acc: evaluate(mlp, eval.test)?,
                rehearsed: vec![0; NUM_CLASSES],
                fit_steps: vec![1],
                wall_clock_secs: clock.elapsed_secs(),
            });
        }
    }
    Ok(RunOutcome {
        records,
        stats: RunStats {
            stream_len: stream.len(),
            gradient_steps: stream.len(),
            ..RunStats::default()
        },
    })
}
