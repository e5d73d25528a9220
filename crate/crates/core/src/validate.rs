//! Goodness-of-fit checks: Kolmogorov–Smirnov tests of the exponential
//! inter-arrival assumption and real-versus-synthetic comparisons.
//!
//! The one-sample tests use the model's λ for each cell rather than one
//! re-estimated from the tested sample, and p-values come from the asymptotic
//! Kolmogorov distribution with Stephens' small-sample correction. Both are
//! approximations; cells with fewer than [`LOW_POWER_N`] gaps are flagged.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;
use core::f64::consts::PI;

use thiserror::Error;

use crate::arrival::ArrivalModel;
use crate::buckets::TrainingBuckets;
use crate::math;
use crate::session::Session;
use crate::stats;
use crate::summary::summarize;
use crate::time::{SlotKey, TimeGrid};

/// Cells with fewer inter-arrival times than this are flagged as low power.
pub const LOW_POWER_N: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum ValidateError {
    #[error("data must be non-negative and finite")]
    NonPositiveData,
    #[error("rate must be positive and finite")]
    InvalidRate,
    #[error("no data to test")]
    EmptyInput,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
    pub n: usize,
}

/// Exact sup-distance between the empirical CDF of `data` and the
/// exponential CDF with rate `lambda`.
///
/// Zero gaps are allowed (duplicate arrival instants); negative values are not.
pub fn ks_statistic_exponential(data: &[f64], lambda: f64) -> Result<f64, ValidateError> {
    if data.is_empty() {
        return Err(ValidateError::EmptyInput);
    }
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(ValidateError::InvalidRate);
    }
    if data.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
        return Err(ValidateError::NonPositiveData);
    }
    let sorted = stats::sorted(data);
    let n = sorted.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in sorted.iter().enumerate() {
        let cdf = -libm::expm1(-lambda * x);
        let above = (i + 1) as f64 / n - cdf;
        let below = cdf - i as f64 / n;
        d = d.max(above).max(below);
    }
    Ok(d.clamp(0.0, 1.0))
}

/// Kolmogorov survival function `Q(z) = 2 Σ (−1)^{k−1} exp(−2k²z²)`.
///
/// The alternating series converges slowly for small `z`; there the
/// equivalent theta-function form of the CDF is summed instead.
pub fn kolmogorov_q(z: f64) -> f64 {
    if z.is_nan() || z <= 0.0 {
        return 1.0;
    }
    if z < 1.18 {
        let mut cdf = 0.0;
        let mut k = 1.0;
        loop {
            let m = 2.0 * k - 1.0;
            let term = math::exp(-m * m * PI * PI / (8.0 * z * z));
            cdf += term;
            if term <= 1e-16 * cdf || term == 0.0 {
                break;
            }
            k += 1.0;
        }
        let cdf = math::sqrt(2.0 * PI) / z * cdf;
        return (1.0 - cdf).clamp(0.0, 1.0);
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    let mut k = 1.0;
    loop {
        let term = math::exp(-2.0 * k * k * z * z);
        sum += sign * term;
        if term < 1e-12 {
            break;
        }
        sign = -sign;
        k += 1.0;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Asymptotic p-value of a one-sample KS statistic `d` from `n` observations.
pub fn ks_pvalue(d: f64, n: usize) -> f64 {
    if d <= 0.0 || n == 0 {
        return 1.0;
    }
    let sqrt_n = math::sqrt(n as f64);
    kolmogorov_q((sqrt_n + 0.12 + 0.11 / sqrt_n) * d)
}

/// Two-sample KS distance `sup |F_a − F_b|` between empirical CDFs.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<f64, ValidateError> {
    if a.is_empty() || b.is_empty() {
        return Err(ValidateError::EmptyInput);
    }
    let (a, b) = (stats::sorted(a), stats::sorted(b));
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d = 0.0f64;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(d)
}

/// One-sample KS results of the exponential inter-arrival assumption.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ArrivalFitReport {
    pub cells: BTreeMap<SlotKey, KsResult>,
    /// Cells with a single inter-arrival time.
    pub omitted: Vec<SlotKey>,
    /// Tested cells with fewer than [`LOW_POWER_N`] gaps.
    pub low_power: Vec<SlotKey>,
}

impl ArrivalFitReport {
    /// Share of tested cells not rejected at level `alpha`.
    pub fn pass_rate(&self, alpha: f64) -> Option<f64> {
        if self.cells.is_empty() {
            return None;
        }
        let passed = self.cells.values().filter(|r| r.p_value >= alpha).count();
        Some(passed as f64 / self.cells.len() as f64)
    }
}

/// Tests every cell with at least two inter-arrival times against the
/// exponential distribution with that cell's model rate.
pub fn validate_arrival_fit(model: &ArrivalModel, buckets: &TrainingBuckets) -> ArrivalFitReport {
    let mut report = ArrivalFitReport::default();
    for (key, iats) in &buckets.iats {
        if iats.len() < 2 {
            report.omitted.push(*key);
            continue;
        }
        let lambda = model.rate().for_slot(key);
        let statistic = ks_statistic_exponential(iats, lambda).expect("bucketed gaps are non-negative");
        let n = iats.len();
        if n < LOW_POWER_N {
            report.low_power.push(*key);
        }
        report.cells.insert(*key, KsResult { statistic, p_value: ks_pvalue(statistic, n), n });
    }
    report
}

/// Per-slot count moments of both datasets; `None` where a dataset never
/// observed the slot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CountComparison {
    pub mean_real: Option<f64>,
    pub var_real: Option<f64>,
    pub mean_synth: Option<f64>,
    pub var_synth: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RealSyntheticComparison {
    pub counts: BTreeMap<SlotKey, CountComparison>,
    pub duration_ks: f64,
    pub energy_ks: f64,
    pub n_real: usize,
    pub n_synth: usize,
}

pub fn compare_real_synthetic(
    real: &[Session],
    synth: &[Session],
    grid: &TimeGrid,
) -> Result<RealSyntheticComparison, ValidateError> {
    if real.is_empty() || synth.is_empty() {
        return Err(ValidateError::EmptyInput);
    }
    let (sr, ss) = (summarize(real, grid), summarize(synth, grid));
    let keys: BTreeSet<SlotKey> = sr.counts.keys().chain(ss.counts.keys()).copied().collect();
    let counts = keys
        .into_iter()
        .map(|k| {
            let r = sr.counts.get(&k);
            let s = ss.counts.get(&k);
            let c = CountComparison {
                mean_real: r.map(|c| c.mean),
                var_real: r.map(|c| c.variance),
                mean_synth: s.map(|c| c.mean),
                var_synth: s.map(|c| c.variance),
            };
            (k, c)
        })
        .collect();
    let dur = |xs: &[Session]| xs.iter().map(Session::connected_hours).collect::<Vec<_>>();
    let energy = |xs: &[Session]| xs.iter().map(Session::energy_kwh).collect::<Vec<_>>();
    Ok(RealSyntheticComparison {
        counts,
        duration_ks: ks_two_sample(&dur(real), &dur(synth))?,
        energy_ks: ks_two_sample(&energy(real), &energy(synth))?,
        n_real: real.len(),
        n_synth: synth.len(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub arrival_fit: ArrivalFitReport,
    pub comparison: RealSyntheticComparison,
}
