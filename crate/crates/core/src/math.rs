//! Dense vector helpers, activations, losses and the seeded generator.
//!
//! Everything is `f64` and every reduction is a plain left-to-right sum so
//! that results are bit-reproducible across runs and platforms. Transcendental
//! functions come from `libm` rather than the platform libm for the same
//! reason.

use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng as _, SeedableRng};
use rand_pcg::Pcg64;

use crate::error::{Error, Result};

/// Probability clamp applied before taking logarithms in [`bce_loss`].
pub const LOSS_EPS: f64 = 1e-12;

/// Dot product. Errors if the lengths differ.
pub fn dot(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            actual: b.len(),
        });
    }
    Ok(dot_unchecked(a, b))
}

/// Dot product over the common prefix; callers check lengths.
///
/// Four interleaved partial sums, combined as `(s0 + s1) + (s2 + s3)` plus
/// the sequential tail. The order is fixed, so results are reproducible.
#[inline]
pub(crate) fn dot_unchecked(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let mut s = [0.0f64; 4];
    let (ca, cb) = (a.chunks_exact(4), b.chunks_exact(4));
    let (ta, tb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        s[0] += x[0] * y[0];
        s[1] += x[1] * y[1];
        s[2] += x[2] * y[2];
        s[3] += x[3] * y[3];
    }
    let mut acc = (s[0] + s[1]) + (s[2] + s[3]);
    for (x, y) in ta.iter().zip(tb) {
        acc += x * y;
    }
    acc
}

/// Logistic function, evaluated on the branch that avoids overflow.
#[inline]
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + libm::exp(-z))
    } else {
        let e = libm::exp(z);
        e / (1.0 + e)
    }
}

/// Binary cross entropy of probability `p` against a 0/1 target.
///
/// `p` is clamped into `[LOSS_EPS, 1 - LOSS_EPS]` first.
pub fn bce_loss(p: f64, target: f64) -> f64 {
    let p = p.clamp(LOSS_EPS, 1.0 - LOSS_EPS);
    -(target * libm::log(p) + (1.0 - target) * libm::log(1.0 - p))
}

/// Natural log, routed through `libm` like the rest of the crate.
#[inline]
pub fn ln(x: f64) -> f64 {
    libm::log(x)
}

#[inline]
pub fn exp(x: f64) -> f64 {
    libm::exp(x)
}

/// Index of the largest value; lowest index wins ties.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Index of the smallest value; lowest index wins ties.
pub fn argmin(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v < values[best] {
            best = i;
        }
    }
    best
}

/// Seeded generator used for every random choice in the crate.
///
/// Backed by PCG-XSL-RR 128/64 (`Pcg64`), seeded through
/// `SeedableRng::seed_from_u64`. Same seed, same stream, on every platform.
#[derive(Debug, Clone)]
pub struct Rng {
    seed: u64,
    inner: Pcg64,
}

impl Rng {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            inner: Pcg64::seed_from_u64(seed),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn next_u64(&mut self) -> u64 {
        rand::RngCore::next_u64(&mut self.inner)
    }

    /// Uniform draw from `[lo, hi)`.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.inner.gen::<f64>()
    }

    /// Uniform integer in `0..n`. `n` must be positive.
    pub fn below(&mut self, n: usize) -> usize {
        self.inner.gen_range(0..n)
    }

    /// `amount` distinct indices from `0..len`, in sampling order.
    pub fn sample_indices(&mut self, len: usize, amount: usize) -> Vec<usize> {
        rand::seq::index::sample(&mut self.inner, len, amount.min(len)).into_vec()
    }

    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        items.shuffle(&mut self.inner);
    }

    /// Derive an independent child generator, e.g. one per experiment arm.
    pub fn fork(&mut self) -> Rng {
        Rng::new(self.next_u64())
    }
}
