//! Arrival model: λ(month, day type, time of day), the per-slot count family,
//! and the two arrival samplers.

mod counts;
mod rate;
mod sample;

use alloc::vec::Vec;

use rand::Rng;
use thiserror::Error;

pub use counts::{
    fit_count_family, fit_negbinom, negbinom_from_moments, overdispersion_ratio, CountDist,
    CountFamily, OverdispersionRule,
};
pub use rate::{
    fit_lambda_curve, fit_lambda_piecewise, ArrivalRate, FourierSeries, LambdaCurve, LambdaTable,
    RateBounds,
};
pub use sample::{sample_arrivals_counts, sample_arrivals_iat, ArrivalSampler, IatBoundaryPolicy};

use crate::time::{Horizon, SlotKey, TimeGrid, Timestamp};

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum ArrivalError {
    #[error("no arrival counts to train on")]
    EmptyTraining,
    #[error("empty count sample")]
    EmptyCounts,
    #[error("count sample has zero mean")]
    ZeroMean,
    #[error("count variance does not exceed the mean")]
    NotOverdispersed,
    #[error("Fourier order {order} needs more than {slots_per_day} slots per day")]
    OrderTooHigh { order: usize, slots_per_day: usize },
    #[error("rate bounds must satisfy 0 < min < max, got [{min}, {max}]")]
    InvalidBounds { min: f64, max: f64 },
    #[error("rate table has no value for {0}")]
    IncompleteTable(SlotKey),
    #[error("rate {rate} for {key} lies outside the rate bounds")]
    RateOutOfBounds { key: SlotKey, rate: f64 },
    #[error("negative binomial for {key} needs r > 0 and 0 < p < 1, got r = {r}, p = {p}")]
    InvalidNegBinom { key: SlotKey, r: f64, p: f64 },
    #[error("rate coefficients must be finite")]
    NonFiniteCoefficient,
    #[error("model keys do not match the time grid")]
    GridMismatch,
}

/// The fitted arrival model.
#[derive(Debug, Clone, PartialEq)]
pub struct ArrivalModel {
    rate: ArrivalRate,
    counts: CountFamily,
    iat_boundary_policy: IatBoundaryPolicy,
    sampler: ArrivalSampler,
}

impl ArrivalModel {
    pub fn new(
        rate: ArrivalRate,
        counts: CountFamily,
        iat_boundary_policy: IatBoundaryPolicy,
        sampler: ArrivalSampler,
    ) -> Result<Self, ArrivalError> {
        let slots = rate.grid().slots_per_day();
        if counts.negbinom_entries().any(|(k, _, _)| k.slot >= slots) {
            return Err(ArrivalError::GridMismatch);
        }
        Ok(Self { rate, counts, iat_boundary_policy, sampler })
    }

    pub fn grid(&self) -> &TimeGrid {
        self.rate.grid()
    }

    pub fn rate(&self) -> &ArrivalRate {
        &self.rate
    }

    pub fn counts(&self) -> &CountFamily {
        &self.counts
    }

    pub fn iat_boundary_policy(&self) -> IatBoundaryPolicy {
        self.iat_boundary_policy
    }

    pub fn sampler(&self) -> ArrivalSampler {
        self.sampler
    }

    pub fn with_iat_boundary_policy(mut self, policy: IatBoundaryPolicy) -> Self {
        self.iat_boundary_policy = policy;
        self
    }

    /// Arrival rate (per hour) at `t`, always inside the rate bounds.
    pub fn eval_lambda(&self, t: Timestamp) -> f64 {
        self.rate.at(t)
    }

    /// Strictly increasing arrival instants in `[horizon.start, horizon.end)`,
    /// as fractional seconds since the epoch.
    pub fn sample<R: Rng + ?Sized>(
        &self,
        horizon: &Horizon,
        sampler: ArrivalSampler,
        rng: &mut R,
    ) -> Vec<f64> {
        match sampler {
            ArrivalSampler::Iat => sample_arrivals_iat(self, horizon, rng),
            ArrivalSampler::Counts => sample_arrivals_counts(self, horizon, rng),
        }
    }
}
