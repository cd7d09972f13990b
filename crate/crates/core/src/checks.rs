//! Randomized property suites: the non-interference theorem, the
//! minout/maxout mirror identity, and finite-difference gradient checks.
//!
//! They are plain functions returning reports so the CLI `verify` command and
//! the test suites can share them.

use alloc::vec::Vec;

use crate::data::Example;
use crate::error::Result;
use crate::interference::{partition_bruteforce, verify_noninterference, ExampleStore};
use crate::math::Rng;
use crate::minout::{clipped_maxout_output, clipped_minout_output, ClipVariant, Init, UnitParams};
use crate::mlp::MlpParams;

/// Central-difference step.
pub const FD_STEP: f64 = 1e-5;
/// Relative tolerance for gradient agreement.
pub const GRAD_REL_TOL: f64 = 1e-5;
/// Below this absolute difference a partial is considered matching; it sits
/// far under the finite-difference round-off of an O(1) loss.
pub const GRAD_ABS_FLOOR: f64 = 1e-9;
/// Probes whose winning pre-activation is this close to a runner-up (or a
/// ReLU kink) are skipped.
pub const TIE_MARGIN: f64 = 1e-4;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TheoremReport {
    pub instances: usize,
    /// Total `s3` examples compared across instances.
    pub s3_checked: usize,
    pub violations: usize,
    /// Same check run through the minout mirror `minout(W,b) = -maxout(-W,-b)`.
    pub mirror_violations: usize,
}

impl TheoremReport {
    pub fn passed(&self) -> bool {
        self.violations == 0 && self.mirror_violations == 0
    }
}

fn random_vec(rng: &mut Rng, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..n).map(|_| rng.uniform(lo, hi)).collect()
}

/// Random hard-clip instances (`d <= 20`, `k <= 10`, `|store| <= 200`): one
/// update confined to column `G(x_new)` must leave every `s3` output
/// bit-identical.
///
/// Instances alternate between a real gradient step and an arbitrary large
/// perturbation of the selected column.
pub fn theorem_suite(seed: u64, instances: usize) -> Result<TheoremReport> {
    let mut rng = Rng::new(seed);
    let mut report = TheoremReport::default();
    for n in 0..instances {
        let d = 1 + rng.below(20);
        let k = 2 + rng.below(9);
        let size = 1 + rng.below(200);
        let unit = UnitParams::init(d, k, Init::Uniform { scale: 1.0 }, &mut rng)?;
        let mut store = ExampleStore::new();
        for _ in 0..size {
            store.push(Example {
                features: random_vec(&mut rng, d, -1.0, 1.0),
                label: 0,
                source: 0,
            });
        }
        let x_new = random_vec(&mut rng, d, -1.0, 1.0);
        let part = partition_bruteforce(&store, &unit, &x_new, ClipVariant::HardMaxoutClip0, 0.1)?;
        let mut after = unit.clone();
        if n % 2 == 0 {
            let target = rng.below(2) as f64;
            let lr = rng.uniform(0.01, 5.0);
            after.gradient_step(&x_new, target, lr, ClipVariant::HardMaxoutClip0)?;
        } else {
            let scale = rng.uniform(0.1, 10.0);
            for w in after.column_mut(part.selected) {
                *w += rng.uniform(-scale, scale);
            }
            after.bias_mut()[part.selected] += rng.uniform(-scale, scale);
        }
        let check = verify_noninterference(&unit, &after, &store, &part, ClipVariant::HardMaxoutClip0)?;
        report.instances += 1;
        report.s3_checked += check.checked;
        report.violations += check.violations.len();

        // The minout unit with parameters (-W, -b) is the mirror of this one.
        let (mirror_before, mirror_after) = (unit.negated(), after.negated());
        for &id in &part.s3 {
            let x = &store.get(id).expect("s3 id").features;
            let a = clipped_minout_output(&mirror_before, x)?;
            let b = clipped_minout_output(&mirror_after, x)?;
            if a.to_bits() != b.to_bits() {
                report.mirror_violations += 1;
            }
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct MirrorReport {
    pub probes: usize,
    pub mismatches: usize,
}

/// `minout(W,b)(x) == -maxout(-W,-b)(x)`, compared exactly.
pub fn mirror_suite(seed: u64, probes: usize) -> Result<MirrorReport> {
    let mut rng = Rng::new(seed);
    let mut report = MirrorReport::default();
    for _ in 0..probes {
        let d = 1 + rng.below(20);
        let k = 1 + rng.below(10);
        let unit = UnitParams::init(d, k, Init::Uniform { scale: 1.0 }, &mut rng)?;
        let x = random_vec(&mut rng, d, -1.0, 1.0);
        let minout = clipped_minout_output(&unit, &x)?;
        let maxout = clipped_maxout_output(&unit.negated(), &x)?;
        report.probes += 1;
        if minout != -maxout {
            report.mismatches += 1;
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct GradCheckReport {
    /// Probes actually compared.
    pub probes: usize,
    /// Probes discarded for sitting next to a tie or kink.
    pub skipped: usize,
    /// Probes with at least one partial out of tolerance.
    pub failures: usize,
    pub max_rel_err: f64,
    /// Largest `|analytic - numeric|` seen, floor or not.
    pub max_abs_err: f64,
}

impl GradCheckReport {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

/// Relative disagreement, or zero when the absolute gap is below the floor.
pub fn grad_rel_err(analytic: f64, numeric: f64) -> f64 {
    let diff = (analytic - numeric).abs();
    if diff <= GRAD_ABS_FLOOR {
        return 0.0;
    }
    diff / analytic.abs().max(numeric.abs())
}

fn second_gap(pre: &[f64]) -> f64 {
    let mut sorted = pre.to_vec();
    sorted.sort_by(f64::total_cmp);
    if sorted.len() < 2 {
        f64::INFINITY
    } else {
        sorted[1] - sorted[0]
    }
}

/// Weight `i` of column `j`, or the bias of neuron `j` when `i == d`.
fn param_mut(unit: &mut UnitParams, j: usize, i: usize) -> &mut f64 {
    if i == unit.dim() {
        &mut unit.bias_mut()[j]
    } else {
        &mut unit.column_mut(j)[i]
    }
}

/// Analytic sigmoid-minout gradient against central differences of
/// `bce_loss(output(x), target)` over every weight and bias.
pub fn minout_gradient_suite(seed: u64, probes: usize) -> Result<GradCheckReport> {
    let mut rng = Rng::new(seed);
    let variant = ClipVariant::SigmoidMinout;
    let mut report = GradCheckReport::default();
    while report.probes < probes {
        let d = 1 + rng.below(10);
        let k = 2 + rng.below(5);
        let mut unit = UnitParams::init(d, k, Init::Uniform { scale: 0.5 }, &mut rng)?;
        let x = random_vec(&mut rng, d, 0.0, 1.0);
        let target = rng.below(2) as f64;
        if second_gap(&unit.preactivations(&x)?) < TIE_MARGIN {
            report.skipped += 1;
            continue;
        }
        let (g, residual) = unit.loss_gradient(&x, target, variant)?;
        let mut worst: f64 = 0.0;
        for j in 0..k {
            for i in 0..=d {
                let analytic = if j != g {
                    0.0
                } else if i == d {
                    residual
                } else {
                    residual * x[i]
                };
                let orig = *param_mut(&mut unit, j, i);
                *param_mut(&mut unit, j, i) = orig + FD_STEP;
                let up = unit.loss(&x, target, variant)?;
                *param_mut(&mut unit, j, i) = orig - FD_STEP;
                let down = unit.loss(&x, target, variant)?;
                *param_mut(&mut unit, j, i) = orig;
                let numeric = (up - down) / (2.0 * FD_STEP);
                worst = worst.max(grad_rel_err(analytic, numeric));
                report.max_abs_err = report.max_abs_err.max((analytic - numeric).abs());
            }
        }
        report.probes += 1;
        report.max_rel_err = report.max_rel_err.max(worst);
        if worst > GRAD_REL_TOL {
            report.failures += 1;
        }
    }
    Ok(report)
}

/// Backprop through a small ReLU/softmax MLP against central differences.
pub fn mlp_gradient_suite(seed: u64, probes: usize, inputs: usize, hidden: usize, outputs: usize) -> Result<GradCheckReport> {
    let mut rng = Rng::new(seed);
    let mut report = GradCheckReport::default();
    while report.probes < probes {
        let mut mlp = MlpParams::new(inputs, hidden, outputs, false, &mut rng)?;
        for b in mlp.b1.iter_mut().chain(mlp.b2.iter_mut()) {
            *b = rng.uniform(-0.5, 0.5);
        }
        let x = random_vec(&mut rng, inputs, 0.0, 1.0);
        let label = rng.below(outputs);
        let fwd = mlp.forward(&x)?;
        if fwd.hidden_pre.iter().any(|h| h.abs() < TIE_MARGIN) {
            report.skipped += 1;
            continue;
        }
        let analytic = mlp.gradient(&x, label)?.flatten();
        let mut worst: f64 = 0.0;
        for (p, &a) in analytic.iter().enumerate() {
            let orig = *mlp.params_mut().nth(p).expect("param");
            *mlp.params_mut().nth(p).expect("param") = orig + FD_STEP;
            let up = mlp.loss(&x, label)?;
            *mlp.params_mut().nth(p).expect("param") = orig - FD_STEP;
            let down = mlp.loss(&x, label)?;
            *mlp.params_mut().nth(p).expect("param") = orig;
            let numeric = (up - down) / (2.0 * FD_STEP);
            worst = worst.max(grad_rel_err(a, numeric));
            report.max_abs_err = report.max_abs_err.max((a - numeric).abs());
        }
        report.probes += 1;
        report.max_rel_err = report.max_rel_err.max(worst);
        if worst > GRAD_REL_TOL {
            report.failures += 1;
        }
    }
    Ok(report)
}
