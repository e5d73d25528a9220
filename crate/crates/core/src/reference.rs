//! A ground-truth session generator with known parameters, for checking that
//! training recovers what produced the data.
//!
//! Its sampler is deliberately separate from [`crate::arrival`]: Poisson
//! counts per slot occurrence, arrivals at uniform whole seconds in the slot.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Poisson};

use crate::math;
use crate::mixture::{Gmm, MixtureError};
use crate::rng::seeded;
use crate::session::Session;
use crate::time::{DayType, Horizon, SlotKey, TimeGrid};

#[derive(Debug, Clone, PartialEq)]
pub enum RateProfile {
    Flat(f64),
    /// Two commuter peaks, lower on weekends, mild seasonal swing. Values
    /// lie in [0.5, 6] per hour.
    Desk,
}

impl RateProfile {
    pub fn rate(&self, key: &SlotKey, grid: &TimeGrid) -> f64 {
        match self {
            RateProfile::Flat(r) => *r,
            RateProfile::Desk => desk_rate(key, grid),
        }
    }
}

fn desk_rate(key: &SlotKey, grid: &TimeGrid) -> f64 {
    let h = grid.slot_center_hour(key.slot);
    let bump = |peak: f64| math::exp(-(h - peak) * (h - peak) / 8.0);
    let daily = 1.5 + 4.5 * bump(9.0) + 3.0 * bump(17.0);
    let weekend = match key.daytype {
        DayType::Weekday => 1.0,
        DayType::Weekend => 0.8,
    };
    let season = 1.0 + 0.1 * math::cos(2.0 * PI * f64::from(key.month - 1) / 12.0);
    (daily * weekend * season).clamp(0.5, 6.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub rate: RateProfile,
    pub duration_hours: Gmm,
    pub energy_kwh: Gmm,
}

impl GroundTruth {
    /// Duration mixture with mean 3 h, energy mixture with mean 8 kWh.
    pub fn with_rate(rate: RateProfile) -> Self {
        Self {
            rate,
            duration_hours: Gmm::new(vec![0.5, 0.5], vec![1.5, 4.5], vec![0.5, 1.0]).expect("valid mixture"),
            energy_kwh: Gmm::new(vec![0.6, 0.4], vec![6.0, 11.0], vec![1.5, 2.0]).expect("valid mixture"),
        }
    }

    /// Flat λ = 2 per hour.
    pub fn flat() -> Self {
        Self::with_rate(RateProfile::Flat(2.0))
    }

    pub fn desk() -> Self {
        Self::with_rate(RateProfile::Desk)
    }

    /// Sessions over `horizon`, sorted by arrival. Durations are rounded to
    /// whole seconds, at least one.
    pub fn sample(&self, horizon: &Horizon, grid: &TimeGrid, seed: u64) -> Result<Vec<Session>, MixtureError> {
        let mut rng = seeded(seed);
        let slot_seconds = grid.slot_seconds();
        let mut sessions = Vec::new();
        let mut offsets = Vec::new();
        for occ in horizon.slot_occurrences(grid) {
            let mean = self.rate.rate(&occ.key, grid) * grid.slot_hours();
            let n = Poisson::new(mean).map(|p| p.sample(&mut rng) as usize).unwrap_or(0);
            offsets.clear();
            offsets.extend((0..n).map(|_| rng.random_range(0..slot_seconds)));
            offsets.sort_unstable();
            for &off in &offsets {
                let arrival = occ.start.checked_add_seconds(off).expect("inside horizon");
                let hours = self.duration_hours.sample_positive(&mut rng)?;
                let energy = self.energy_kwh.sample_positive(&mut rng)?;
                let seconds = (math::round(hours * 3600.0) as i64).max(1);
                let departure = arrival.checked_add_seconds(seconds).expect("bounded duration");
                sessions.push(Session::new(arrival, departure, energy).expect("positive by construction"));
            }
        }
        Ok(sessions)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn desk_rates_in_range() {
        let grid = TimeGrid::default();
        let rates: Vec<f64> = grid.slot_keys().map(|k| RateProfile::Desk.rate(&k, &grid)).collect();
        assert!(rates.iter().all(|r| (0.5..=6.0).contains(r)));
        let mean = rates.iter().sum::<f64>() / rates.len() as f64;
        assert!((2.5..3.5).contains(&mean), "{mean}");
    }

    #[test]
    fn sample_is_reproducible_and_sorted() {
        let start = chrono::NaiveDate::from_ymd_opt(2021, 3, 1).unwrap();
        let h = Horizon::new(start, start + chrono::Days::new(3)).unwrap();
        let grid = TimeGrid::default();
        let a = GroundTruth::desk().sample(&h, &grid, 5).unwrap();
        assert_eq!(a, GroundTruth::desk().sample(&h, &grid, 5).unwrap());
        assert!(a.windows(2).all(|w| w[0].arrival() <= w[1].arrival()));
        assert!(a.iter().all(|s| h.contains(s.arrival())));
    }
}
