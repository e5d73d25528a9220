use alloc::collections::BTreeMap;

use rand::Rng;
use rand_distr::{Distribution, Gamma, Poisson};

use super::ArrivalError;
use crate::stats;
use crate::time::SlotKey;

/// Distribution of the number of arrivals in one slot occurrence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CountDist {
    Poisson,
    /// Negative binomial with dispersion `r` and success probability `p`, as
    /// fitted by the method of moments. When sampling, `r` is kept and the mean
    /// is taken from the rate model, so `p` only records the training fit.
    NegBinom { r: f64, p: f64 },
}

impl CountDist {
    /// Draws a count with the given mean.
    pub fn sample<R: Rng + ?Sized>(&self, mean: f64, rng: &mut R) -> u64 {
        if mean.is_nan() || mean <= 0.0 {
            return 0;
        }
        match *self {
            CountDist::Poisson => sample_poisson(mean, rng),
            CountDist::NegBinom { r, .. } => {
                // Gamma–Poisson mixture with shape r and mean `mean`.
                let gamma = Gamma::new(r, mean / r).expect("validated dispersion");
                sample_poisson(gamma.sample(rng), rng)
            }
        }
    }
}

fn sample_poisson<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> u64 {
    if mean.is_nan() || mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean).expect("finite positive mean").sample(rng) as u64
}

/// Per-slot count family. Keys without an entry are Poisson.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CountFamily {
    negbinom: BTreeMap<SlotKey, CountDist>,
}

impl CountFamily {
    pub fn poisson() -> Self {
        Self::default()
    }

    /// Builds a family from negative binomial entries `(key, r, p)`.
    pub fn from_negbinom(
        entries: impl IntoIterator<Item = (SlotKey, f64, f64)>,
    ) -> Result<Self, ArrivalError> {
        let mut negbinom = BTreeMap::new();
        for (key, r, p) in entries {
            if !(r.is_finite() && r > 0.0 && p > 0.0 && p < 1.0) {
                return Err(ArrivalError::InvalidNegBinom { key, r, p });
            }
            negbinom.insert(key, CountDist::NegBinom { r, p });
        }
        Ok(Self { negbinom })
    }

    pub fn get(&self, key: &SlotKey) -> CountDist {
        self.negbinom.get(key).copied().unwrap_or(CountDist::Poisson)
    }

    /// Keys using the negative binomial family, in key order.
    pub fn negbinom_entries(&self) -> impl Iterator<Item = (SlotKey, f64, f64)> + '_ {
        self.negbinom.iter().filter_map(|(k, d)| match *d {
            CountDist::NegBinom { r, p } => Some((*k, r, p)),
            CountDist::Poisson => None,
        })
    }

    pub fn negbinom_len(&self) -> usize {
        self.negbinom.len()
    }
}

/// When a slot switches from Poisson to negative binomial counts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OverdispersionRule {
    /// Variance-to-mean ratio above which counts count as overdispersed.
    pub ratio_threshold: f64,
    /// Minimum number of slot occurrences before the switch is considered.
    pub min_occurrences: usize,
}

impl Default for OverdispersionRule {
    fn default() -> Self {
        Self { ratio_threshold: 1.5, min_occurrences: 30 }
    }
}

/// Sample variance over sample mean. A single observation has ratio 1.
pub fn overdispersion_ratio(counts: &[u32]) -> Result<f64, ArrivalError> {
    let xs = stats::counts_as_f64(counts);
    let mean = stats::mean(&xs).ok_or(ArrivalError::EmptyCounts)?;
    if mean <= 0.0 {
        return Err(ArrivalError::ZeroMean);
    }
    Ok(match stats::sample_variance(&xs) {
        Some(var) => var / mean,
        None => 1.0,
    })
}

/// Method-of-moments negative binomial fit: `r = m² / (v − m)`, `p = m / v`.
pub fn fit_negbinom(counts: &[u32]) -> Result<(f64, f64), ArrivalError> {
    let xs = stats::counts_as_f64(counts);
    let mean = stats::mean(&xs).ok_or(ArrivalError::EmptyCounts)?;
    if mean <= 0.0 {
        return Err(ArrivalError::ZeroMean);
    }
    let var = stats::sample_variance(&xs).ok_or(ArrivalError::NotOverdispersed)?;
    negbinom_from_moments(mean, var)
}

pub fn negbinom_from_moments(mean: f64, var: f64) -> Result<(f64, f64), ArrivalError> {
    if mean <= 0.0 {
        return Err(ArrivalError::ZeroMean);
    }
    if var <= mean {
        return Err(ArrivalError::NotOverdispersed);
    }
    Ok((mean * mean / (var - mean), mean / var))
}

/// Chooses the count family of every key; keys failing the rule stay Poisson.
pub fn fit_count_family(
    counts: &BTreeMap<SlotKey, alloc::vec::Vec<u32>>,
    rule: &OverdispersionRule,
) -> CountFamily {
    let mut negbinom = BTreeMap::new();
    for (key, c) in counts {
        if c.len() < rule.min_occurrences {
            continue;
        }
        let Ok(ratio) = overdispersion_ratio(c) else { continue };
        if ratio <= rule.ratio_threshold {
            continue;
        }
        if let Ok((r, p)) = fit_negbinom(c) {
            negbinom.insert(*key, CountDist::NegBinom { r, p });
        }
    }
    CountFamily { negbinom }
}
