//! Clipped maxout and minimally clipped minout units.
//!
//! A unit owns `k` linear neurons over a `d`-dimensional input. Each neuron's
//! pre-activation is `x·W[:,j] + b[j]`. The two supported variants are:
//!
//! * [`ClipVariant::HardMaxoutClip0`]: `z_j = min(pre_j, 0)`, `h = max_j z_j`,
//!   the winner `G(x)` is the argmax of the pre-activations and neuron `j`
//!   counts as clipped when `pre_j >= 0`.
//! * [`ClipVariant::SigmoidMinout`]: `z_j = sigmoid(pre_j)`, `h = min_j z_j`,
//!   the winner is the argmin of the pre-activations and neuron `j` counts as
//!   clipped when `z_j < tau`.
//!
//! In both cases only the winning neuron carries gradient, so a gradient step
//! touches exactly one column of `W` and one entry of `b`.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math::{argmax, argmin, bce_loss, dot_unchecked, sigmoid, Rng};

/// Default clip threshold for the sigmoid variant.
pub const DEFAULT_TAU: f64 = 0.1;
/// Default per-unit stop loss.
pub const DEFAULT_STOP_LOSS: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ClipVariant {
    /// `max_j min(pre_j, 0)`.
    HardMaxoutClip0,
    /// `min_j sigmoid(pre_j)` with soft clipping at `tau`.
    SigmoidMinout,
}

impl ClipVariant {
    pub fn name(self) -> &'static str {
        match self {
            ClipVariant::HardMaxoutClip0 => "hard_maxout",
            ClipVariant::SigmoidMinout => "sigmoid_minout",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "hard_maxout" => Some(ClipVariant::HardMaxoutClip0),
            "sigmoid_minout" => Some(ClipVariant::SigmoidMinout),
            _ => None,
        }
    }

    /// Learning rate used when the caller does not pick one.
    pub fn default_lr(self) -> f64 {
        match self {
            ClipVariant::HardMaxoutClip0 => 0.05,
            ClipVariant::SigmoidMinout => 0.5,
        }
    }

    /// Whether a neuron with pre-activation `pre` is clipped.
    #[inline]
    pub fn is_clipped(self, pre: f64, tau: f64) -> bool {
        match self {
            ClipVariant::HardMaxoutClip0 => pre >= 0.0,
            ClipVariant::SigmoidMinout => sigmoid(pre) < tau,
        }
    }

    #[inline]
    fn neuron_value(self, pre: f64) -> f64 {
        match self {
            ClipVariant::HardMaxoutClip0 => pre.min(0.0),
            ClipVariant::SigmoidMinout => sigmoid(pre),
        }
    }

    #[inline]
    fn select(self, pre: &[f64]) -> usize {
        match self {
            ClipVariant::HardMaxoutClip0 => argmax(pre),
            ClipVariant::SigmoidMinout => argmin(pre),
        }
    }

    /// Probability fed to the cross-entropy loss for unit output `h`.
    ///
    /// The sigmoid variant's output already is a probability. The hard
    /// variant's output lives in `(-inf, 0]` and goes through a logistic link.
    #[inline]
    pub fn probability(self, h: f64) -> f64 {
        match self {
            ClipVariant::HardMaxoutClip0 => sigmoid(h),
            ClipVariant::SigmoidMinout => h,
        }
    }
}

/// Parameter initialisation for fresh units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Init {
    Zeros,
    /// Independent draws from `uniform(-scale, scale)`.
    Uniform { scale: f64 },
}

/// Parameters of one unit: `W` is `d x k`, stored column by column.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitParams {
    dim: usize,
    neurons: usize,
    weights: Vec<f64>,
    bias: Vec<f64>,
}

/// Result of a single gradient step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    /// Column selected by `G(x)`; the only one that may have changed.
    pub neuron: usize,
    /// `dL/dpre` at the selected neuron.
    pub residual: f64,
    /// False when the derivative through the clip was zero and nothing moved.
    pub applied: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitConfig {
    pub lr: f64,
    pub stop_loss: f64,
    pub max_steps: usize,
}

impl FitConfig {
    pub fn for_variant(variant: ClipVariant) -> Self {
        Self {
            lr: variant.default_lr(),
            stop_loss: DEFAULT_STOP_LOSS,
            max_steps: 100,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::InvalidArgument(alloc::format!("lr must be > 0, got {}", self.lr)));
        }
        if self.stop_loss.is_nan() || self.stop_loss <= 0.0 {
            return Err(Error::InvalidArgument(alloc::format!(
                "stop_loss must be > 0, got {}",
                self.stop_loss
            )));
        }
        if self.max_steps == 0 {
            return Err(Error::InvalidArgument("max_steps must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOutcome {
    /// Gradient steps taken, including no-op steps through a dead clip.
    pub steps: usize,
    /// Whether the loss ended below the stop threshold.
    pub converged: bool,
    pub final_loss: f64,
}

/// Set of neuron indices modified since the last index refresh.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TouchedNeurons {
    marks: Vec<bool>,
}

impl TouchedNeurons {
    pub fn new(neurons: usize) -> Self {
        Self {
            marks: vec![false; neurons],
        }
    }

    pub fn mark(&mut self, neuron: usize) {
        self.marks[neuron] = true;
    }

    pub fn contains(&self, neuron: usize) -> bool {
        self.marks[neuron]
    }

    pub fn is_empty(&self) -> bool {
        !self.marks.iter().any(|&m| m)
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.marks
            .iter()
            .enumerate()
            .filter_map(|(j, &m)| m.then_some(j))
    }

    pub fn len(&self) -> usize {
        self.marks.iter().filter(|&&m| m).count()
    }

    pub fn clear(&mut self) {
        self.marks.iter_mut().for_each(|m| *m = false);
    }
}

impl UnitParams {
    pub fn zeros(dim: usize, neurons: usize) -> Result<Self> {
        Self::from_parts(dim, neurons, vec![0.0; dim * neurons], vec![0.0; neurons])
    }

    /// Build from column-major weights (`weights[j*dim..(j+1)*dim]` is
    /// column `j`) and one bias per neuron.
    pub fn from_parts(dim: usize, neurons: usize, weights: Vec<f64>, bias: Vec<f64>) -> Result<Self> {
        if dim == 0 || neurons == 0 {
            return Err(Error::InvalidArgument(alloc::format!(
                "unit needs d >= 1 and k >= 1, got d={dim} k={neurons}"
            )));
        }
        if weights.len() != dim * neurons {
            return Err(Error::DimensionMismatch {
                expected: dim * neurons,
                actual: weights.len(),
            });
        }
        if bias.len() != neurons {
            return Err(Error::DimensionMismatch {
                expected: neurons,
                actual: bias.len(),
            });
        }
        if weights.iter().chain(&bias).any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("non-finite parameter".into()));
        }
        Ok(Self {
            dim,
            neurons,
            weights,
            bias,
        })
    }

    pub fn init(dim: usize, neurons: usize, init: Init, rng: &mut Rng) -> Result<Self> {
        let mut unit = Self::zeros(dim, neurons)?;
        if let Init::Uniform { scale } = init {
            for w in unit.weights.iter_mut().chain(unit.bias.iter_mut()) {
                *w = rng.uniform(-scale, scale);
            }
        }
        Ok(unit)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn neurons(&self) -> usize {
        self.neurons
    }

    pub fn column(&self, j: usize) -> &[f64] {
        &self.weights[j * self.dim..(j + 1) * self.dim]
    }

    pub fn column_mut(&mut self, j: usize) -> &mut [f64] {
        &mut self.weights[j * self.dim..(j + 1) * self.dim]
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    pub fn bias_mut(&mut self) -> &mut [f64] {
        &mut self.bias
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Unit with every weight and bias negated.
    pub fn negated(&self) -> Self {
        Self {
            dim: self.dim,
            neurons: self.neurons,
            weights: self.weights.iter().map(|w| -w).collect(),
            bias: self.bias.iter().map(|b| -b).collect(),
        }
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                actual: x.len(),
            });
        }
        Ok(())
    }

    /// Pre-activation of a single neuron; assumes `x` has the right length.
    #[inline]
    pub(crate) fn preactivation_at(&self, x: &[f64], j: usize) -> f64 {
        dot_unchecked(x, self.column(j)) + self.bias[j]
    }

    pub(crate) fn preactivations_into(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.extend((0..self.neurons).map(|j| self.preactivation_at(x, j)));
    }

    pub fn preactivations(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_input(x)?;
        let mut out = Vec::with_capacity(self.neurons);
        self.preactivations_into(x, &mut out);
        Ok(out)
    }

    /// The clipped neuron values `z_j(x)`.
    pub fn neuron_values(&self, x: &[f64], variant: ClipVariant) -> Result<Vec<f64>> {
        let mut pre = self.preactivations(x)?;
        pre.iter_mut().for_each(|p| *p = variant.neuron_value(*p));
        Ok(pre)
    }

    /// Unit output `h(x)`.
    pub fn output(&self, x: &[f64], variant: ClipVariant) -> Result<f64> {
        let pre = self.preactivations(x)?;
        Ok(output_from_pre(&pre, variant))
    }

    /// The winning neuron `G(x)`.
    pub fn select_neuron(&self, x: &[f64], variant: ClipVariant) -> Result<usize> {
        let pre = self.preactivations(x)?;
        Ok(variant.select(&pre))
    }

    pub fn clip_status(&self, x: &[f64], variant: ClipVariant, tau: f64) -> Result<Vec<bool>> {
        let pre = self.preactivations(x)?;
        Ok(pre.iter().map(|&p| variant.is_clipped(p, tau)).collect())
    }

    /// Cross-entropy of the unit output against `target`.
    pub fn loss(&self, x: &[f64], target: f64, variant: ClipVariant) -> Result<f64> {
        let h = self.output(x, variant)?;
        Ok(bce_loss(variant.probability(h), target))
    }

    /// Selected neuron and `dL/dpre` there; every other partial is zero.
    ///
    /// The full gradient is `residual * x` for column `neuron` and `residual`
    /// for `b[neuron]`.
    pub fn loss_gradient(&self, x: &[f64], target: f64, variant: ClipVariant) -> Result<(usize, f64)> {
        let pre = self.preactivations(x)?;
        Ok(gradient_from_pre(&pre, target, variant))
    }

    /// One gradient-descent step on the cross-entropy, routed entirely to the
    /// selected neuron.
    pub fn gradient_step(
        &mut self,
        x: &[f64],
        target: f64,
        lr: f64,
        variant: ClipVariant,
    ) -> Result<StepOutcome> {
        self.check_input(x)?;
        if target != 0.0 && target != 1.0 {
            return Err(Error::InvalidArgument(alloc::format!("target must be 0 or 1, got {target}")));
        }
        if lr.is_nan() || lr <= 0.0 {
            return Err(Error::InvalidArgument(alloc::format!("lr must be > 0, got {lr}")));
        }
        let mut pre = Vec::with_capacity(self.neurons);
        self.preactivations_into(x, &mut pre);
        let (g, residual) = gradient_from_pre(&pre, target, variant);
        Ok(self.apply_step(x, g, residual, lr))
    }

    fn apply_step(&mut self, x: &[f64], g: usize, residual: f64, lr: f64) -> StepOutcome {
        if residual == 0.0 {
            return StepOutcome {
                neuron: g,
                residual,
                applied: false,
            };
        }
        let scale = lr * residual;
        for (w, xi) in self.column_mut(g).iter_mut().zip(x) {
            *w -= scale * xi;
        }
        self.bias[g] -= scale;
        StepOutcome {
            neuron: g,
            residual,
            applied: true,
        }
    }

    /// Repeat gradient steps on one example until its loss drops below
    /// `cfg.stop_loss` or `cfg.max_steps` steps have been taken.
    ///
    /// Every column that actually moved is recorded in `touched`. Running out
    /// of steps is reported through [`FitOutcome::converged`], not an error.
    pub fn fit_example(
        &mut self,
        x: &[f64],
        target: f64,
        cfg: &FitConfig,
        variant: ClipVariant,
        touched: &mut TouchedNeurons,
    ) -> Result<FitOutcome> {
        self.check_input(x)?;
        if target != 0.0 && target != 1.0 {
            return Err(Error::InvalidArgument(alloc::format!("target must be 0 or 1, got {target}")));
        }
        let mut pre = Vec::with_capacity(self.neurons);
        let mut steps = 0;
        loop {
            self.preactivations_into(x, &mut pre);
            let h = output_from_pre(&pre, variant);
            let loss = bce_loss(variant.probability(h), target);
            if loss < cfg.stop_loss {
                return Ok(FitOutcome {
                    steps,
                    converged: true,
                    final_loss: loss,
                });
            }
            if steps == cfg.max_steps {
                return Ok(FitOutcome {
                    steps,
                    converged: false,
                    final_loss: loss,
                });
            }
            let (g, residual) = gradient_from_pre(&pre, target, variant);
            if self.apply_step(x, g, residual, cfg.lr).applied {
                touched.mark(g);
            }
            steps += 1;
        }
    }
}

pub(crate) fn output_from_pre(pre: &[f64], variant: ClipVariant) -> f64 {
    let g = variant.select(pre);
    variant.neuron_value(pre[g])
}

pub(crate) fn gradient_from_pre(pre: &[f64], target: f64, variant: ClipVariant) -> (usize, f64) {
    let g = variant.select(pre);
    let residual = match variant {
        // h = z_g = min(pre_g, 0); dh/dpre_g vanishes once the neuron is clipped.
        ClipVariant::HardMaxoutClip0 => {
            if pre[g] >= 0.0 {
                0.0
            } else {
                sigmoid(pre[g]) - target
            }
        }
        ClipVariant::SigmoidMinout => sigmoid(pre[g]) - target,
    };
    (g, residual)
}

/// Minimally clipped minout with hard clipping: `min_j max(pre_j, 0)`.
pub fn clipped_minout_output(unit: &UnitParams, x: &[f64]) -> Result<f64> {
    let pre = unit.preactivations(x)?;
    Ok(pre.iter().map(|p| p.max(0.0)).fold(f64::INFINITY, f64::min))
}

/// Maximally clipped maxout: `max_j min(pre_j, 0)`.
pub fn clipped_maxout_output(unit: &UnitParams, x: &[f64]) -> Result<f64> {
    unit.output(x, ClipVariant::HardMaxoutClip0)
}

/// One unit per class sharing a variant and clip threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct MinoutModel {
    units: Vec<UnitParams>,
    variant: ClipVariant,
    tau: f64,
    clip_constant: f64,
}

impl MinoutModel {
    pub fn new(
        num_units: usize,
        dim: usize,
        neurons: usize,
        variant: ClipVariant,
        tau: f64,
        init: Init,
        rng: &mut Rng,
    ) -> Result<Self> {
        let units = (0..num_units)
            .map(|_| UnitParams::init(dim, neurons, init, rng))
            .collect::<Result<Vec<_>>>()?;
        Self::from_units(units, variant, tau)
    }

    pub fn from_units(units: Vec<UnitParams>, variant: ClipVariant, tau: f64) -> Result<Self> {
        let Some(first) = units.first() else {
            return Err(Error::InvalidArgument("model needs at least one unit".into()));
        };
        let (d, k) = (first.dim, first.neurons);
        if units.iter().any(|u| u.dim != d || u.neurons != k) {
            return Err(Error::InvalidArgument("all units must share d and k".into()));
        }
        if !(tau > 0.0 && tau < 1.0) {
            return Err(Error::InvalidArgument(alloc::format!("tau must lie in (0,1), got {tau}")));
        }
        Ok(Self {
            units,
            variant,
            tau,
            clip_constant: 0.0,
        })
    }

    /// Only `C = 0` is supported; the bias absorbs any other constant.
    pub fn with_clip_constant(mut self, c: f64) -> Result<Self> {
        if c != 0.0 {
            return Err(Error::InvalidArgument(alloc::format!(
                "clip constant {c} unsupported; only 0 is implemented"
            )));
        }
        self.clip_constant = c;
        Ok(self)
    }

    pub fn units(&self) -> &[UnitParams] {
        &self.units
    }

    pub fn unit(&self, i: usize) -> &UnitParams {
        &self.units[i]
    }

    pub fn unit_mut(&mut self, i: usize) -> &mut UnitParams {
        &mut self.units[i]
    }

    pub fn num_units(&self) -> usize {
        self.units.len()
    }

    pub fn dim(&self) -> usize {
        self.units[0].dim
    }

    pub fn neurons(&self) -> usize {
        self.units[0].neurons
    }

    pub fn variant(&self) -> ClipVariant {
        self.variant
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn clip_constant(&self) -> f64 {
        self.clip_constant
    }

    pub fn outputs(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.units.iter().map(|u| u.output(x, self.variant)).collect()
    }

    /// Label whose unit output is largest; lowest label wins ties.
    pub fn predict(&self, x: &[f64]) -> Result<usize> {
        Ok(argmax(&self.outputs(x)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ClipVariant::*;

    fn unit_1x2() -> UnitParams {
        UnitParams::from_parts(1, 2, vec![1.0, -1.0], vec![-1.0, -1.0]).unwrap()
    }

    #[test]
    fn preactivation_examples() {
        let zero = UnitParams::zeros(3, 4).unwrap();
        assert_eq!(zero.preactivations(&[0.3, -2.0, 7.0]).unwrap(), vec![0.0; 4]);
        let u = unit_1x2();
        assert_eq!(u.preactivations(&[2.0]).unwrap(), vec![1.0, -3.0]);
        assert_eq!(u.preactivations(&[0.0]).unwrap(), vec![-1.0, -1.0]);
        assert!(matches!(
            u.preactivations(&[1.0, 2.0]),
            Err(Error::DimensionMismatch { expected: 1, actual: 2 })
        ));
    }

    #[test]
    fn neuron_value_examples() {
        let u = unit_1x2();
        assert_eq!(u.neuron_values(&[2.0], HardMaxoutClip0).unwrap(), vec![0.0, -3.0]);
        assert_eq!(u.neuron_values(&[0.0], HardMaxoutClip0).unwrap(), vec![-1.0, -1.0]);
        let zero = UnitParams::zeros(2, 2).unwrap();
        assert_eq!(zero.neuron_values(&[1.0, 1.0], SigmoidMinout).unwrap(), vec![0.5, 0.5]);
    }

    #[test]
    fn output_examples() {
        let u = unit_1x2();
        assert_eq!(u.output(&[2.0], HardMaxoutClip0).unwrap(), 0.0);
        assert_eq!(u.output(&[0.0], HardMaxoutClip0).unwrap(), -1.0);
        let zero = UnitParams::zeros(4, 5).unwrap();
        assert_eq!(zero.output(&[1.0; 4], SigmoidMinout).unwrap(), 0.5);
    }

    #[test]
    fn select_neuron_examples() {
        let u = unit_1x2();
        assert_eq!(u.select_neuron(&[2.0], HardMaxoutClip0).unwrap(), 0);
        let zero = UnitParams::zeros(2, 3).unwrap();
        assert_eq!(zero.select_neuron(&[1.0, 1.0], HardMaxoutClip0).unwrap(), 0);
        assert_eq!(zero.select_neuron(&[1.0, 1.0], SigmoidMinout).unwrap(), 0);
        let bias_only = UnitParams::from_parts(1, 3, vec![0.0; 3], vec![2.0, -1.0, 0.5]).unwrap();
        assert_eq!(bias_only.select_neuron(&[0.0], SigmoidMinout).unwrap(), 1);
    }

    #[test]
    fn clip_status_examples() {
        let u = unit_1x2();
        assert_eq!(u.clip_status(&[2.0], HardMaxoutClip0, 0.1).unwrap(), vec![true, false]);
        // pre = -2.19722 gives sigmoid just above 0.1: not clipped under strict <.
        let edge = UnitParams::from_parts(1, 1, vec![0.0], vec![-2.19722]).unwrap();
        assert!(sigmoid(-2.19722) > 0.1);
        assert_eq!(edge.clip_status(&[1.0], SigmoidMinout, 0.1).unwrap(), vec![false]);
        let below = UnitParams::from_parts(1, 1, vec![0.0], vec![-2.2]).unwrap();
        assert_eq!(below.clip_status(&[1.0], SigmoidMinout, 0.1).unwrap(), vec![true]);
        let zero = UnitParams::zeros(3, 4).unwrap();
        assert_eq!(zero.clip_status(&[0.2; 3], SigmoidMinout, 0.1).unwrap(), vec![false; 4]);
    }

    #[test]
    fn gradient_step_hand_example() {
        let mut u = UnitParams::zeros(1, 1).unwrap();
        let out = u.gradient_step(&[1.0], 1.0, 1.0, SigmoidMinout).unwrap();
        assert_eq!(out.neuron, 0);
        assert_eq!(out.residual, -0.5);
        assert_eq!(u.column(0), &[0.5]);
        assert_eq!(u.bias(), &[0.5]);
    }

    #[test]
    fn gradient_step_zero_residual_is_noop() {
        // Saturate far enough that sigmoid(pre) == 1.0 exactly.
        let mut u = UnitParams::from_parts(1, 2, vec![0.0, 0.0], vec![50.0, 60.0]).unwrap();
        let before = u.clone();
        let out = u.gradient_step(&[1.0], 1.0, 0.5, SigmoidMinout).unwrap();
        assert!(out.residual.abs() <= 1e-12);
        for (a, b) in u.weights().iter().zip(before.weights()) {
            assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn gradient_step_touches_only_selected_column() {
        let mut rng = Rng::new(5);
        for variant in [HardMaxoutClip0, SigmoidMinout] {
            for _ in 0..200 {
                let mut u = UnitParams::init(6, 5, Init::Uniform { scale: 1.0 }, &mut rng).unwrap();
                let x: Vec<f64> = (0..6).map(|_| rng.uniform(-1.0, 1.0)).collect();
                let before = u.clone();
                let target = rng.below(2) as f64;
                let out = u.gradient_step(&x, target, 0.3, variant).unwrap();
                for j in (0..5).filter(|&j| j != out.neuron) {
                    assert_eq!(
                        u.column(j).iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
                        before.column(j).iter().map(|v| v.to_bits()).collect::<Vec<_>>()
                    );
                    assert_eq!(u.bias()[j].to_bits(), before.bias()[j].to_bits());
                }
            }
        }
    }

    #[test]
    fn gradient_step_validates_arguments() {
        let mut u = UnitParams::zeros(2, 2).unwrap();
        assert!(u.gradient_step(&[1.0], 1.0, 0.1, SigmoidMinout).is_err());
        assert!(u.gradient_step(&[1.0, 0.0], 0.5, 0.1, SigmoidMinout).is_err());
        assert!(u.gradient_step(&[1.0, 0.0], 1.0, 0.0, SigmoidMinout).is_err());
    }

    #[test]
    fn fit_already_fit_example_takes_no_steps() {
        let mut u = UnitParams::from_parts(1, 2, vec![0.0, 0.0], vec![-5.0, -5.0]).unwrap();
        let mut touched = TouchedNeurons::new(2);
        let out = u
            .fit_example(&[1.0], 0.0, &FitConfig::for_variant(SigmoidMinout), SigmoidMinout, &mut touched)
            .unwrap();
        assert_eq!(out.steps, 0);
        assert!(out.converged);
        assert!(touched.is_empty());
    }

    #[test]
    fn fit_zero_init_sigmoid_unit_converges() {
        let mut u = UnitParams::zeros(4, 5).unwrap();
        let x = [0.2, 0.9, 0.0, 0.5];
        let cfg = FitConfig::for_variant(SigmoidMinout);
        let mut touched = TouchedNeurons::new(5);
        let out = u.fit_example(&x, 1.0, &cfg, SigmoidMinout, &mut touched).unwrap();
        assert!(out.converged);
        assert!(out.steps > 0 && out.steps <= cfg.max_steps);
        assert!(u.loss(&x, 1.0, SigmoidMinout).unwrap() < 0.1);
        assert!(u.output(&x, SigmoidMinout).unwrap() > 0.9048);
        // Every neuron had to be lifted above the output threshold.
        assert_eq!(touched.len(), 5);
    }

    #[test]
    fn fit_dead_hard_clip_exhausts_steps() {
        // Selected neuron is clipped (pre >= 0) and target 1 wants a larger output.
        let mut u = UnitParams::from_parts(1, 2, vec![1.0, -1.0], vec![0.0, -1.0]).unwrap();
        let before = u.clone();
        let cfg = FitConfig {
            lr: 0.05,
            stop_loss: 0.1,
            max_steps: 7,
        };
        let mut touched = TouchedNeurons::new(2);
        let out = u.fit_example(&[2.0], 1.0, &cfg, HardMaxoutClip0, &mut touched).unwrap();
        assert_eq!(out.steps, 7);
        assert!(!out.converged);
        assert_eq!(u, before);
        assert!(touched.is_empty());
    }

    #[test]
    fn output_ranges() {
        let mut rng = Rng::new(9);
        for _ in 0..500 {
            let u = UnitParams::init(5, 4, Init::Uniform { scale: 3.0 }, &mut rng).unwrap();
            let x: Vec<f64> = (0..5).map(|_| rng.uniform(-2.0, 2.0)).collect();
            assert!(u.output(&x, HardMaxoutClip0).unwrap() <= 0.0);
            let h = u.output(&x, SigmoidMinout).unwrap();
            assert!(h > 0.0 && h < 1.0);
        }
    }

    #[test]
    fn bias_shift_leaves_selection_unchanged() {
        let mut rng = Rng::new(13);
        for _ in 0..300 {
            let u = UnitParams::init(4, 6, Init::Uniform { scale: 1.0 }, &mut rng).unwrap();
            let x: Vec<f64> = (0..4).map(|_| rng.uniform(-1.0, 1.0)).collect();
            // A power of two keeps the shift exact for moderately sized values.
            let shift = 4.0;
            let mut shifted = u.clone();
            shifted.bias_mut().iter_mut().for_each(|b| *b += shift);
            for variant in [HardMaxoutClip0, SigmoidMinout] {
                assert_eq!(
                    u.select_neuron(&x, variant).unwrap(),
                    shifted.select_neuron(&x, variant).unwrap()
                );
            }
        }
    }

    #[test]
    fn mirror_identity_on_random_units() {
        let mut rng = Rng::new(21);
        for _ in 0..1000 {
            let d = 1 + rng.below(8);
            let k = 1 + rng.below(6);
            let u = UnitParams::init(d, k, Init::Uniform { scale: 1.0 }, &mut rng).unwrap();
            let x: Vec<f64> = (0..d).map(|_| rng.uniform(-1.0, 1.0)).collect();
            let minout = clipped_minout_output(&u, &x).unwrap();
            let maxout = clipped_maxout_output(&u.negated(), &x).unwrap();
            assert_eq!(minout, -maxout);
        }
    }

    #[test]
    fn model_predicts_argmax_with_low_tie_break() {
        let mut rng = Rng::new(0);
        let mut model = MinoutModel::new(10, 3, 4, SigmoidMinout, DEFAULT_TAU, Init::Zeros, &mut rng).unwrap();
        assert_eq!(model.predict(&[0.1, 0.2, 0.3]).unwrap(), 0);
        model.unit_mut(7).bias_mut().iter_mut().for_each(|b| *b = 5.0);
        assert_eq!(model.predict(&[0.1, 0.2, 0.3]).unwrap(), 7);
    }

    #[test]
    fn model_rejects_bad_configuration() {
        let mut rng = Rng::new(0);
        assert!(MinoutModel::new(0, 3, 4, SigmoidMinout, 0.1, Init::Zeros, &mut rng).is_err());
        assert!(MinoutModel::new(2, 3, 4, SigmoidMinout, 0.0, Init::Zeros, &mut rng).is_err());
        let m = MinoutModel::new(2, 3, 4, HardMaxoutClip0, 0.1, Init::Zeros, &mut rng).unwrap();
        assert!(m.clone().with_clip_constant(0.0).is_ok());
        assert!(m.with_clip_constant(1.0).is_err());
        let mixed = vec![UnitParams::zeros(3, 4).unwrap(), UnitParams::zeros(3, 5).unwrap()];
        assert!(MinoutModel::from_units(mixed, SigmoidMinout, 0.1).is_err());
    }
}
