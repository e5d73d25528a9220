use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::MixtureError;
use crate::math;

/// Tolerance on the sum of mixture weights.
pub const WEIGHT_SUM_TOLERANCE: f64 = 1e-9;
/// Draws attempted before giving up on a positive sample.
pub const MAX_POSITIVE_ATTEMPTS: usize = 1000;

/// One-dimensional Gaussian mixture.
#[derive(Debug, Clone, PartialEq)]
pub struct Gmm {
    weights: Vec<f64>,
    means: Vec<f64>,
    stddevs: Vec<f64>,
}

impl Gmm {
    pub fn new(weights: Vec<f64>, means: Vec<f64>, stddevs: Vec<f64>) -> Result<Self, MixtureError> {
        let k = weights.len();
        if k == 0 || means.len() != k || stddevs.len() != k {
            return Err(MixtureError::invalid("weights, means and stddevs need equal, non-zero length"));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w > 0.0 && *w <= 1.0)) {
            return Err(MixtureError::invalid("every weight must lie in (0, 1]"));
        }
        if (weights.iter().sum::<f64>() - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
            return Err(MixtureError::invalid("weights must sum to 1"));
        }
        if means.iter().any(|m| !m.is_finite()) {
            return Err(MixtureError::invalid("means must be finite"));
        }
        if stddevs.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
            return Err(MixtureError::invalid("stddevs must be positive and finite"));
        }
        Ok(Self { weights, means, stddevs })
    }

    pub fn single(mean: f64, stddev: f64) -> Result<Self, MixtureError> {
        Self::new(alloc::vec![1.0], alloc::vec![mean], alloc::vec![stddev])
    }

    pub fn k(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn means(&self) -> &[f64] {
        &self.means
    }

    pub fn stddevs(&self) -> &[f64] {
        &self.stddevs
    }

    pub fn mean(&self) -> f64 {
        self.weights.iter().zip(&self.means).map(|(w, m)| w * m).sum()
    }

    /// `log Σ w_j φ(x; μ_j, σ_j)` via log-sum-exp.
    pub fn log_pdf(&self, x: f64) -> f64 {
        let mut terms = [0.0f64; 16];
        let mut heap;
        let lp: &mut [f64] = if self.k() <= terms.len() {
            &mut terms[..self.k()]
        } else {
            heap = alloc::vec![0.0; self.k()];
            &mut heap
        };
        for (j, slot) in lp.iter_mut().enumerate() {
            *slot = math::ln(self.weights[j]) + normal_log_pdf(x, self.means[j], self.stddevs[j]);
        }
        log_sum_exp(lp)
    }

    fn pick_component<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (j, w) in self.weights.iter().enumerate() {
            acc += w;
            if u < acc {
                return j;
            }
        }
        self.k() - 1
    }

    /// Draws from the mixture, rejecting non-positive values.
    ///
    /// After [`MAX_POSITIVE_ATTEMPTS`] rejections the smallest positive
    /// component mean is returned; a model without one is degenerate.
    pub fn sample_positive<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<f64, MixtureError> {
        for _ in 0..MAX_POSITIVE_ATTEMPTS {
            let j = self.pick_component(rng);
            let z: f64 = StandardNormal.sample(rng);
            let x = self.means[j] + self.stddevs[j] * z;
            if x > 0.0 {
                return Ok(x);
            }
        }
        self.means
            .iter()
            .copied()
            .filter(|m| *m > 0.0)
            .min_by(f64::total_cmp)
            .ok_or(MixtureError::DegenerateModel)
    }
}

pub(crate) fn normal_log_pdf(x: f64, mean: f64, stddev: f64) -> f64 {
    let z = (x - mean) / stddev;
    -0.5 * (math::LN_2PI + z * z) - math::ln(stddev)
}

pub(crate) fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + math::ln(xs.iter().map(|x| math::exp(x - m)).sum::<f64>())
}
