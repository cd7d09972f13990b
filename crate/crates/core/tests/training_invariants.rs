//! End-to-end invariants of the training loops on a small synthetic stream.

use std::collections::BTreeSet;

use rehearse_core::data::{Example, NUM_CLASSES};
use rehearse_core::interference::{partition_bruteforce, ExampleId, ExampleStore, InterferenceIndex};
use rehearse_core::math::Rng;
use rehearse_core::minout::{ClipVariant, FitConfig, Init, MinoutModel, DEFAULT_TAU};
use rehearse_core::training::{train_minout, EvalSets, FitSubject, Method, NoClock, Observer, RunConfig};

/// Class `c` lights up coordinates `2c` and `2c + 1`; 20 dimensions.
fn stream(per_class: usize, seed: u64) -> Vec<Example> {
    let mut rng = Rng::new(seed);
    let mut out = Vec::new();
    for c in 0..NUM_CLASSES {
        for _ in 0..per_class {
            let mut x: Vec<f64> = (0..20).map(|_| rng.uniform(0.0, 0.1)).collect();
            x[2 * c] = rng.uniform(0.7, 1.0);
            x[2 * c + 1] = rng.uniform(0.7, 1.0);
            out.push(Example {
                features: x,
                label: c as u8,
                source: out.len(),
            });
        }
    }
    out
}

fn model(variant: ClipVariant, init: Init, seed: u64) -> MinoutModel {
    MinoutModel::new(NUM_CLASSES, 20, 6, variant, DEFAULT_TAU, init, &mut Rng::new(seed)).unwrap()
}

fn run(
    data: &[Example],
    m: &mut MinoutModel,
    cfg: &RunConfig,
    obs: &mut dyn Observer,
) -> rehearse_core::training::RunOutcome {
    let mut store = ExampleStore::new();
    let mut idx: Vec<_> = (0..NUM_CLASSES).map(|_| InterferenceIndex::new(m.neurons())).collect();
    let eval = EvalSets { train: data, test: data };
    train_minout(data, m, &mut store, &mut idx, cfg, eval, &NoClock, obs).unwrap()
}

/// Records every gradient subject and checks it against the frozen set.
#[derive(Default)]
struct AccessLog {
    allowed: Vec<BTreeSet<ExampleId>>,
    violations: usize,
    fits: usize,
}

impl Observer for AccessLog {
    fn before_example(&mut self, _: usize, _: &MinoutModel, _: &ExampleStore) {
        self.allowed = vec![BTreeSet::new(); NUM_CLASSES];
    }
    fn rehearsal_set(&mut self, _: usize, unit: usize, ids: &[ExampleId]) {
        self.allowed[unit] = ids.iter().copied().collect();
    }
    fn on_fit(&mut self, _: usize, unit: usize, subject: FitSubject) {
        self.fits += 1;
        if let FitSubject::Stored(id) = subject {
            if !self.allowed[unit].contains(&id) {
                self.violations += 1;
            }
        }
    }
}

#[test]
fn conditional_touches_only_interfered_set_and_new_example() {
    let data = stream(6, 1);
    let mut m = model(ClipVariant::SigmoidMinout, Init::Zeros, 0);
    let cfg = RunConfig::new(Method::Conditional, FitConfig::for_variant(ClipVariant::SigmoidMinout));
    let mut log = AccessLog::default();
    let out = run(&data, &mut m, &cfg, &mut log);
    assert!(log.fits > data.len() * NUM_CLASSES);
    assert_eq!(log.violations, 0);
    let first = &out.records[0];
    let last = out.last().unwrap();
    assert!(last.train_acc >= first.train_acc);
}

/// Captures s3 outputs before each stream step and compares afterwards.
struct S3Watch {
    stream: Vec<Example>,
    before: Vec<Vec<(ExampleId, f64)>>,
    checked: usize,
    violations: usize,
}

impl Observer for S3Watch {
    fn before_example(&mut self, step: usize, model: &MinoutModel, store: &ExampleStore) {
        let x = &self.stream[step - 1].features;
        self.before = (0..model.num_units())
            .map(|i| {
                let unit = model.unit(i);
                let part = partition_bruteforce(store, unit, x, model.variant(), model.tau()).unwrap();
                part.s3
                    .iter()
                    .map(|&id| (id, unit.output(&store.get(id).unwrap().features, model.variant()).unwrap()))
                    .collect()
            })
            .collect();
    }
    fn after_example(&mut self, _: usize, model: &MinoutModel, store: &ExampleStore) {
        for (i, outs) in self.before.iter().enumerate() {
            for &(id, h) in outs {
                self.checked += 1;
                let now = model.unit(i).output(&store.get(id).unwrap().features, model.variant()).unwrap();
                if now.to_bits() != h.to_bits() {
                    self.violations += 1;
                }
            }
        }
    }
}

#[test]
fn hard_clip_single_step_leaves_s3_outputs_bit_identical() {
    let data = stream(5, 2);
    let mut m = model(ClipVariant::HardMaxoutClip0, Init::Uniform { scale: 0.5 }, 3);
    let fit = FitConfig {
        max_steps: 1,
        ..FitConfig::for_variant(ClipVariant::HardMaxoutClip0)
    };
    let cfg = RunConfig {
        outer_rounds: 1,
        ..RunConfig::new(Method::None, fit)
    };
    let mut watch = S3Watch {
        stream: data.clone(),
        before: Vec::new(),
        checked: 0,
        violations: 0,
    };
    run(&data, &mut m, &cfg, &mut watch);
    assert!(watch.checked > 0);
    assert_eq!(watch.violations, 0);
}

#[test]
fn identical_config_gives_identical_records() {
    let data = stream(4, 5);
    for method in [Method::Conditional, Method::Random, Method::None] {
        let cfg = RunConfig {
            rehearsal_budget: 5,
            seed: 11,
            ..RunConfig::new(method, FitConfig::for_variant(ClipVariant::SigmoidMinout))
        };
        let a = run(&data, &mut model(ClipVariant::SigmoidMinout, Init::Uniform { scale: 0.01 }, 9), &cfg, &mut ());
        let b = run(&data, &mut model(ClipVariant::SigmoidMinout, Init::Uniform { scale: 0.01 }, 9), &cfg, &mut ());
        assert_eq!(a, b, "{}", method.name());
        assert_eq!(a.records.len(), data.len());
    }
}

#[test]
fn debug_checks_find_no_index_mismatch() {
    let data = stream(5, 8);
    for variant in [ClipVariant::SigmoidMinout, ClipVariant::HardMaxoutClip0] {
        let mut m = model(variant, Init::Uniform { scale: 0.3 }, 4);
        let cfg = RunConfig {
            debug_checks: true,
            ..RunConfig::new(Method::Conditional, FitConfig::for_variant(variant))
        };
        let out = run(&data, &mut m, &cfg, &mut ());
        assert_eq!(out.stats.index_checks, data.len() * NUM_CLASSES);
        assert_eq!(out.stats.index_mismatches, 0);
    }
}
