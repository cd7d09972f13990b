//! Two-layer ReLU perceptron with a softmax cross-entropy head, trained by
//! plain per-example SGD. Baseline for the ordered-stream experiments.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math::{argmax, dot_unchecked, exp, ln, Rng};

#[derive(Debug, Clone, PartialEq)]
pub struct MlpParams {
    inputs: usize,
    hidden: usize,
    outputs: usize,
    /// `hidden x inputs`, row per hidden unit.
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    /// `outputs x hidden`, row per output.
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
}

/// Intermediate values of a forward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct Forward {
    pub hidden_pre: Vec<f64>,
    pub hidden: Vec<f64>,
    pub logits: Vec<f64>,
    pub probs: Vec<f64>,
}

/// Gradient with the same layout as [`MlpParams`].
#[derive(Debug, Clone, PartialEq)]
pub struct MlpGradient {
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
}

fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&l| exp(l - max)).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

impl MlpParams {
    /// He-uniform first layer; the output layer is uniform with bound
    /// `sqrt(6 / hidden)` or all zeros when `zero_output_layer` is set.
    pub fn new(inputs: usize, hidden: usize, outputs: usize, zero_output_layer: bool, rng: &mut Rng) -> Result<Self> {
        if inputs == 0 || hidden == 0 || outputs < 2 {
            return Err(Error::InvalidArgument(alloc::format!(
                "bad mlp shape {inputs}->{hidden}->{outputs}"
            )));
        }
        let a1 = libm::sqrt(6.0 / inputs as f64);
        let w1 = (0..hidden * inputs).map(|_| rng.uniform(-a1, a1)).collect();
        let w2 = if zero_output_layer {
            vec![0.0; outputs * hidden]
        } else {
            let a2 = libm::sqrt(6.0 / hidden as f64);
            (0..outputs * hidden).map(|_| rng.uniform(-a2, a2)).collect()
        };
        Ok(Self {
            inputs,
            hidden,
            outputs,
            w1,
            b1: vec![0.0; hidden],
            w2,
            b2: vec![0.0; outputs],
        })
    }

    pub fn inputs(&self) -> usize {
        self.inputs
    }

    pub fn hidden(&self) -> usize {
        self.hidden
    }

    pub fn outputs(&self) -> usize {
        self.outputs
    }

    fn check(&self, x: &[f64], label: usize) -> Result<()> {
        if x.len() != self.inputs {
            return Err(Error::DimensionMismatch {
                expected: self.inputs,
                actual: x.len(),
            });
        }
        if label >= self.outputs {
            return Err(Error::InvalidArgument(alloc::format!("label {label} out of range")));
        }
        Ok(())
    }

    pub fn forward(&self, x: &[f64]) -> Result<Forward> {
        if x.len() != self.inputs {
            return Err(Error::DimensionMismatch {
                expected: self.inputs,
                actual: x.len(),
            });
        }
        let hidden_pre: Vec<f64> = (0..self.hidden)
            .map(|h| dot_unchecked(&self.w1[h * self.inputs..(h + 1) * self.inputs], x) + self.b1[h])
            .collect();
        let hidden: Vec<f64> = hidden_pre.iter().map(|&v| v.max(0.0)).collect();
        let logits: Vec<f64> = (0..self.outputs)
            .map(|o| dot_unchecked(&self.w2[o * self.hidden..(o + 1) * self.hidden], &hidden) + self.b2[o])
            .collect();
        let probs = softmax(&logits);
        Ok(Forward {
            hidden_pre,
            hidden,
            logits,
            probs,
        })
    }

    /// Softmax cross entropy `-ln p_label`, computed via log-sum-exp.
    pub fn loss(&self, x: &[f64], label: usize) -> Result<f64> {
        self.check(x, label)?;
        let fwd = self.forward(x)?;
        let max = fwd.logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = max + ln(fwd.logits.iter().map(|&l| exp(l - max)).sum::<f64>());
        Ok(lse - fwd.logits[label])
    }

    pub fn gradient(&self, x: &[f64], label: usize) -> Result<MlpGradient> {
        self.check(x, label)?;
        let fwd = self.forward(x)?;
        let mut delta_out = fwd.probs.clone();
        delta_out[label] -= 1.0;

        let mut w2 = vec![0.0; self.outputs * self.hidden];
        for o in 0..self.outputs {
            for h in 0..self.hidden {
                w2[o * self.hidden + h] = delta_out[o] * fwd.hidden[h];
            }
        }
        let mut b1 = vec![0.0; self.hidden];
        for (h, slot) in b1.iter_mut().enumerate() {
            if fwd.hidden_pre[h] > 0.0 {
                *slot = (0..self.outputs)
                    .map(|o| delta_out[o] * self.w2[o * self.hidden + h])
                    .sum();
            }
        }
        let mut w1 = vec![0.0; self.hidden * self.inputs];
        for h in 0..self.hidden {
            if b1[h] != 0.0 {
                for (w, xi) in w1[h * self.inputs..(h + 1) * self.inputs].iter_mut().zip(x) {
                    *w = b1[h] * xi;
                }
            }
        }
        Ok(MlpGradient {
            w1,
            b1,
            w2,
            b2: delta_out,
        })
    }

    pub fn sgd_step(&mut self, x: &[f64], label: usize, lr: f64) -> Result<()> {
        let grad = self.gradient(x, label)?;
        let pairs = [
            (&mut self.w1, &grad.w1),
            (&mut self.b1, &grad.b1),
            (&mut self.w2, &grad.w2),
            (&mut self.b2, &grad.b2),
        ];
        for (param, g) in pairs {
            for (p, d) in param.iter_mut().zip(g) {
                *p -= lr * d;
            }
        }
        Ok(())
    }

    pub fn predict(&self, x: &[f64]) -> Result<usize> {
        Ok(argmax(&self.forward(x)?.logits))
    }

    /// Mutable view of every parameter, in the order w1, b1, w2, b2.
    pub fn params_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.w1
            .iter_mut()
            .chain(self.b1.iter_mut())
            .chain(self.w2.iter_mut())
            .chain(self.b2.iter_mut())
    }
}

impl MlpGradient {
    /// Every partial, in the same order as [`MlpParams::params_mut`].
    pub fn flatten(&self) -> Vec<f64> {
        self.w1
            .iter()
            .chain(&self.b1)
            .chain(&self.w2)
            .chain(&self.b2)
            .copied()
            .collect()
    }
}
