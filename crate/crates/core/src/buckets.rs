//! Bucketing of session records into the per-cell training statistics.
//!
//! Inter-arrival times are taken over the pooled arrival stream of the whole
//! network and attributed to the slot of the earlier arrival of each pair.
//! Gaps across nights or closures are kept.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use thiserror::Error;

use crate::session::Session;
use crate::time::{Horizon, MixKey, SlotKey, TimeGrid, Timestamp};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum BucketError {
    #[error("arrival {0} lies outside the counting horizon")]
    ArrivalOutsideHorizon(Timestamp),
}

/// Training statistics consumed by the arrival and mixture fitters.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainingBuckets {
    /// Inter-arrival times in hours, by the earlier arrival's slot.
    pub iats: BTreeMap<SlotKey, Vec<f64>>,
    /// Arrivals per calendar occurrence of each slot, zeros included.
    pub counts: BTreeMap<SlotKey, Vec<u32>>,
    /// Total observed time per slot key, in hours.
    pub observed_hours: BTreeMap<SlotKey, f64>,
    /// Connected times in hours, by arrival cell.
    pub durations: BTreeMap<MixKey, Vec<f64>>,
    /// Charged energy in kWh, by arrival cell.
    pub energies: BTreeMap<MixKey, Vec<f64>>,
}

impl TrainingBuckets {
    /// Buckets sessions sorted by arrival.
    pub fn from_sessions(
        sessions: &[Session],
        grid: &TimeGrid,
        horizon: &Horizon,
        mixture_by_daytype: bool,
    ) -> Result<Self, BucketError> {
        let (counts, observed_hours) = bucket_counts(sessions, grid, horizon)?;
        let (durations, energies) = bucket_mixture_data(sessions, grid, mixture_by_daytype);
        Ok(Self {
            iats: bucket_iats(sessions, grid),
            counts,
            observed_hours,
            durations,
            energies,
        })
    }

    pub fn total_arrivals(&self) -> u64 {
        self.counts.values().flatten().map(|&c| u64::from(c)).sum()
    }
}

fn debug_assert_sorted(sessions: &[Session]) {
    debug_assert!(
        sessions.windows(2).all(|w| w[0].arrival() <= w[1].arrival()),
        "sessions must be sorted by arrival"
    );
}

/// Inter-arrival times (hours) of consecutive arrivals, keyed by the slot of
/// the earlier arrival. Duplicate arrival instants contribute zero gaps.
pub fn bucket_iats(sessions: &[Session], grid: &TimeGrid) -> BTreeMap<SlotKey, Vec<f64>> {
    debug_assert_sorted(sessions);
    let mut out: BTreeMap<SlotKey, Vec<f64>> = BTreeMap::new();
    for pair in sessions.windows(2) {
        let (prev, next) = (pair[0].arrival(), pair[1].arrival());
        let gap_hours = (next.seconds() - prev.seconds()) as f64 / 3600.0;
        out.entry(SlotKey::of(prev, grid)).or_default().push(gap_hours);
    }
    out
}

/// Arrival counts per slot occurrence, and observed hours, keyed by cell.
pub type SlotCounts = (BTreeMap<SlotKey, Vec<u32>>, BTreeMap<SlotKey, f64>);

/// Per-occurrence arrival counts and observed hours for every slot of the
/// horizon.
pub fn bucket_counts(
    sessions: &[Session],
    grid: &TimeGrid,
    horizon: &Horizon,
) -> Result<SlotCounts, BucketError> {
    let slots = i64::from(grid.slots_per_day());
    let start = horizon.start_timestamp();
    let mut per_occurrence = vec![0u32; (horizon.days() * slots) as usize];
    for s in sessions {
        let t = s.arrival();
        if !horizon.contains(t) {
            return Err(BucketError::ArrivalOutsideHorizon(t));
        }
        let day = t.day_index() - start.day_index();
        let slot = i64::from(grid.slot_of_seconds(t.seconds_of_day()));
        per_occurrence[(day * slots + slot) as usize] += 1;
    }

    let mut counts: BTreeMap<SlotKey, Vec<u32>> = BTreeMap::new();
    for (occurrence, n) in horizon.slot_occurrences(grid).zip(per_occurrence) {
        counts.entry(occurrence.key).or_default().push(n);
    }
    let observed = counts
        .iter()
        .map(|(k, v)| (*k, v.len() as f64 * grid.slot_hours()))
        .collect();
    Ok((counts, observed))
}

/// Connected times and energies keyed by the arrival cell of each session.
pub fn bucket_mixture_data(
    sessions: &[Session],
    grid: &TimeGrid,
    by_daytype: bool,
) -> (BTreeMap<MixKey, Vec<f64>>, BTreeMap<MixKey, Vec<f64>>) {
    let mut durations: BTreeMap<MixKey, Vec<f64>> = BTreeMap::new();
    let mut energies: BTreeMap<MixKey, Vec<f64>> = BTreeMap::new();
    for s in sessions {
        let key = MixKey::of(s.arrival(), grid, by_daytype);
        durations.entry(key).or_default().push(s.connected_hours());
        energies.entry(key).or_default().push(s.energy_kwh());
    }
    (durations, energies)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::time::DayType;
    use chrono::{NaiveDate, NaiveTime};
    use proptest::prelude::*;

    fn at(y: i32, m: u32, d: u32, h: u32, min: u32) -> Timestamp {
        let date = NaiveDate::from_ymd_opt(y, m, d).unwrap();
        Timestamp::from_datetime(date.and_time(NaiveTime::from_hms_opt(h, min, 0).unwrap()))
    }

    fn session(arrival: Timestamp, hours: f64, kwh: f64) -> Session {
        let dep = arrival.checked_add_seconds((hours * 3600.0) as i64).unwrap();
        Session::new(arrival, dep, kwh).unwrap()
    }

    fn key(month: u8, daytype: DayType, slot: u32) -> SlotKey {
        SlotKey { month, daytype, slot }
    }

    fn day(y: i32, m: u32, d: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(y, m, d).unwrap()
    }

    #[test]
    fn iat_goes_to_earlier_arrival_slot() {
        let grid = TimeGrid::default();
        let s = [session(at(2020, 1, 6, 10, 0), 1.0, 1.0), session(at(2020, 1, 6, 10, 30), 1.0, 1.0)];
        let iats = bucket_iats(&s, &grid);
        assert_eq!(iats.len(), 1);
        assert_eq!(iats[&key(1, DayType::Weekday, 10)], [0.5]);

        let s = [session(at(2020, 1, 6, 10, 50), 1.0, 1.0), session(at(2020, 1, 6, 11, 10), 1.0, 1.0)];
        let iats = bucket_iats(&s, &grid);
        let gap = iats[&key(1, DayType::Weekday, 10)][0];
        assert!((gap - 1.0 / 3.0).abs() < 1e-12);

        assert!(bucket_iats(&s[..1], &grid).is_empty());
    }

    #[test]
    fn counts_include_zero_occurrences() {
        let grid = TimeGrid::default();
        let monday = Horizon::new(day(2020, 1, 6), day(2020, 1, 7)).unwrap();
        let s = [
            session(at(2020, 1, 6, 10, 0), 1.0, 1.0),
            session(at(2020, 1, 6, 10, 20), 1.0, 1.0),
            session(at(2020, 1, 6, 10, 59), 1.0, 1.0),
        ];
        let (counts, hours) = bucket_counts(&s, &grid, &monday).unwrap();
        assert_eq!(counts[&key(1, DayType::Weekday, 10)], [3]);
        assert_eq!(hours[&key(1, DayType::Weekday, 10)], 1.0);

        let two_mondays = Horizon::new(day(2020, 1, 6), day(2020, 1, 14)).unwrap();
        let (counts, _) = bucket_counts(&s, &grid, &two_mondays).unwrap();
        assert_eq!(counts[&key(1, DayType::Weekday, 3)].iter().filter(|&&c| c == 0).count(), 6);
        assert_eq!(counts[&key(1, DayType::Weekend, 3)], [0, 0]);
    }

    #[test]
    fn counts_reject_arrivals_outside_horizon() {
        let grid = TimeGrid::default();
        let h = Horizon::new(day(2020, 1, 6), day(2020, 1, 7)).unwrap();
        let s = [session(at(2020, 1, 7, 0, 0), 1.0, 1.0)];
        assert!(matches!(
            bucket_counts(&s, &grid, &h),
            Err(BucketError::ArrivalOutsideHorizon(_))
        ));
    }

    #[test]
    fn mixture_data_keyed_by_arrival() {
        let grid = TimeGrid::default();
        let s = [
            session(at(2020, 1, 6, 10, 15), 2.5, 7.4),
            session(at(2020, 1, 7, 10, 45), 1.0, 3.0),
        ];
        let (d, e) = bucket_mixture_data(&s, &grid, false);
        let k = MixKey { month: 1, daytype: None, slot: 10 };
        assert_eq!(d[&k], [2.5, 1.0]);
        assert_eq!(e[&k], [7.4, 3.0]);
        assert_eq!(d.len(), 1);

        let (d, _) = bucket_mixture_data(&s, &grid, true);
        assert!(d.contains_key(&MixKey { month: 1, daytype: Some(DayType::Weekday), slot: 10 }));
    }

    proptest! {
        #[test]
        fn bucketing_conserves_sessions(offsets in prop::collection::vec(0i64..14 * 86_400, 0..200)) {
            let grid = TimeGrid::default();
            let horizon = Horizon::new(day(2020, 2, 24), day(2020, 3, 9)).unwrap();
            let base = horizon.start_timestamp().seconds();
            let mut offsets = offsets;
            offsets.sort_unstable();
            let sessions: Vec<Session> = offsets
                .iter()
                .map(|o| session(Timestamp::from_seconds(base + o).unwrap(), 1.5, 2.0))
                .collect();
            let b = TrainingBuckets::from_sessions(&sessions, &grid, &horizon, false).unwrap();
            let n_iat: usize = b.iats.values().map(Vec::len).sum();
            prop_assert_eq!(n_iat, sessions.len().saturating_sub(1));
            prop_assert_eq!(b.total_arrivals(), sessions.len() as u64);
            let hours: f64 = b.observed_hours.values().sum();
            prop_assert_eq!(hours, horizon.hours());
            prop_assert!(b.iats.values().flatten().all(|&x| x >= 0.0));
            let n_dur: usize = b.durations.values().map(Vec::len).sum();
            prop_assert_eq!(n_dur, sessions.len());
        }
    }
}
