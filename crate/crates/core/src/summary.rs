//! Summary statistics of a session set, for comparing datasets.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::buckets::bucket_counts;
use crate::session::Session;
use crate::stats;
use crate::time::{Horizon, SlotKey, TimeGrid};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlotCountStats {
    pub occurrences: usize,
    pub mean: f64,
    /// Sample variance; zero with a single occurrence.
    pub variance: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantityStats {
    pub mean: f64,
    pub stddev: f64,
    pub p5: f64,
    pub p50: f64,
    pub p95: f64,
}

impl QuantityStats {
    pub fn of(xs: &[f64]) -> Option<Self> {
        let sorted = stats::sorted(xs);
        Some(Self {
            mean: stats::mean(xs)?,
            stddev: libm::sqrt(stats::sample_variance(xs).unwrap_or(0.0)),
            p5: stats::quantile_sorted(&sorted, 0.05)?,
            p50: stats::quantile_sorted(&sorted, 0.50)?,
            p95: stats::quantile_sorted(&sorted, 0.95)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub total_sessions: usize,
    /// Whole days spanned by the arrivals; `None` for an empty set.
    pub horizon: Option<Horizon>,
    pub counts: BTreeMap<SlotKey, SlotCountStats>,
    pub duration_hours: Option<QuantityStats>,
    pub energy_kwh: Option<QuantityStats>,
}

/// Totals, per-slot count moments over the days the arrivals span, and
/// duration/energy moments with 5/50/95 % quantiles.
pub fn summarize(sessions: &[Session], grid: &TimeGrid) -> Summary {
    let horizon = Horizon::covering(sessions.iter().map(Session::arrival));
    let counts = match &horizon {
        Some(h) => {
            let (counts, _) = bucket_counts(sessions, grid, h).expect("horizon covers every arrival");
            counts
                .into_iter()
                .map(|(key, c)| {
                    let xs = stats::counts_as_f64(&c);
                    let s = SlotCountStats {
                        occurrences: xs.len(),
                        mean: stats::mean(&xs).unwrap_or(0.0),
                        variance: stats::sample_variance(&xs).unwrap_or(0.0),
                    };
                    (key, s)
                })
                .collect()
        }
        None => BTreeMap::new(),
    };
    let durations: Vec<f64> = sessions.iter().map(Session::connected_hours).collect();
    let energies: Vec<f64> = sessions.iter().map(Session::energy_kwh).collect();
    Summary {
        total_sessions: sessions.len(),
        horizon,
        counts,
        duration_hours: QuantityStats::of(&durations),
        energy_kwh: QuantityStats::of(&energies),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::time::{DayType, Timestamp};

    #[test]
    fn empty_summary() {
        let s = summarize(&[], &TimeGrid::default());
        assert_eq!(s.total_sessions, 0);
        assert!(s.counts.is_empty());
        assert!(s.duration_hours.is_none() && s.energy_kwh.is_none() && s.horizon.is_none());
    }

    #[test]
    fn single_session_counts_once() {
        // 2020-01-06T10:00:00, a Monday
        let t = Timestamp::from_seconds(1_578_304_800).unwrap();
        let s = Session::new(t, t.checked_add_seconds(3600).unwrap(), 4.0).unwrap();
        let summary = summarize(&[s], &TimeGrid::default());
        let cell = summary.counts[&SlotKey { month: 1, daytype: DayType::Weekday, slot: 10 }];
        assert_eq!(cell, SlotCountStats { occurrences: 1, mean: 1.0, variance: 0.0 });
        assert_eq!(summary.counts.values().map(|c| c.mean).sum::<f64>(), 1.0);
        let d = summary.duration_hours.unwrap();
        assert_eq!((d.mean, d.p5, d.p50, d.p95), (1.0, 1.0, 1.0, 1.0));
    }
}
