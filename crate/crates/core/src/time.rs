//! Time vocabulary: timestamps, the time-of-day grid and conditioning keys.
//!
//! All timestamps are naive wall-clock time of the charging network. There is
//! no timezone or DST arithmetic; the slot of a timestamp is derived from its
//! wall-clock minutes since midnight.

use core::fmt;

use chrono::{DateTime, Datelike, NaiveDate, NaiveDateTime, Weekday};
use thiserror::Error;

pub const SECONDS_PER_DAY: i64 = 86_400;
const MINUTES_PER_DAY: u32 = 1_440;
/// Days from 0001-01-01 (day 1 of the common era) to 1970-01-01.
const UNIX_EPOCH_DAYS_FROM_CE: i64 = 719_163;
/// Keeps every timestamp inside chrono's representable calendar.
const MAX_ABS_SECONDS: i64 = 100_000 * 366 * SECONDS_PER_DAY;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum GridError {
    #[error("slot length of {0} minutes does not divide a day evenly")]
    UnevenSlot(u32),
    #[error("horizon end must be after its start")]
    EmptyHorizon,
    #[error("month {0} is outside 1..=12")]
    BadMonth(u32),
    #[error("slot {slot} is outside a grid of {slots_per_day} slots")]
    BadSlot { slot: u32, slots_per_day: u32 },
}

/// Wall-clock timestamp with second resolution, counted from 1970-01-01T00:00:00.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Timestamp(i64);

impl Timestamp {
    /// Returns `None` outside roughly ±100 000 years around 1970.
    pub fn from_seconds(seconds: i64) -> Option<Self> {
        (seconds.abs() <= MAX_ABS_SECONDS).then_some(Self(seconds))
    }

    pub fn from_datetime(dt: NaiveDateTime) -> Self {
        Self(dt.and_utc().timestamp())
    }

    pub fn from_date(date: NaiveDate) -> Self {
        Self(days_since_epoch(date) * SECONDS_PER_DAY)
    }

    pub fn seconds(self) -> i64 {
        self.0
    }

    pub fn to_datetime(self) -> NaiveDateTime {
        DateTime::from_timestamp(self.0, 0)
            .expect("timestamp range is checked at construction")
            .naive_utc()
    }

    pub fn date(self) -> NaiveDate {
        date_from_epoch_days(self.day_index())
    }

    /// Whole days since 1970-01-01 (negative before it).
    pub fn day_index(self) -> i64 {
        self.0.div_euclid(SECONDS_PER_DAY)
    }

    pub fn seconds_of_day(self) -> u32 {
        self.0.rem_euclid(SECONDS_PER_DAY) as u32
    }

    pub fn checked_add_seconds(self, seconds: i64) -> Option<Self> {
        self.0.checked_add(seconds).and_then(Self::from_seconds)
    }
}

impl fmt::Display for Timestamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let date = self.date();
        let s = self.seconds_of_day();
        write!(
            f,
            "{:04}-{:02}-{:02}T{:02}:{:02}:{:02}",
            date.year(),
            date.month(),
            date.day(),
            s / 3600,
            (s / 60) % 60,
            s % 60
        )
    }
}

pub(crate) fn days_since_epoch(date: NaiveDate) -> i64 {
    i64::from(date.num_days_from_ce()) - UNIX_EPOCH_DAYS_FROM_CE
}

pub(crate) fn date_from_epoch_days(days: i64) -> NaiveDate {
    let ce = i32::try_from(days + UNIX_EPOCH_DAYS_FROM_CE).expect("day index in calendar range");
    NaiveDate::from_num_days_from_ce_opt(ce).expect("day index in calendar range")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum DayType {
    Weekday,
    Weekend,
}

impl DayType {
    pub const ALL: [DayType; 2] = [DayType::Weekday, DayType::Weekend];

    /// Saturday and Sunday are weekend days. Public holidays are not special.
    pub fn of(date: NaiveDate) -> Self {
        match date.weekday() {
            Weekday::Sat | Weekday::Sun => DayType::Weekend,
            _ => DayType::Weekday,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            DayType::Weekday => "weekday",
            DayType::Weekend => "weekend",
        }
    }
}

/// Splits a day into equal time-of-day slots.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TimeGrid {
    slot_minutes: u32,
}

impl Default for TimeGrid {
    fn default() -> Self {
        Self { slot_minutes: 60 }
    }
}

impl TimeGrid {
    pub fn new(slot_minutes: u32) -> Result<Self, GridError> {
        if slot_minutes == 0 || MINUTES_PER_DAY % slot_minutes != 0 {
            return Err(GridError::UnevenSlot(slot_minutes));
        }
        Ok(Self { slot_minutes })
    }

    pub fn slot_minutes(&self) -> u32 {
        self.slot_minutes
    }

    pub fn slots_per_day(&self) -> u32 {
        MINUTES_PER_DAY / self.slot_minutes
    }

    pub fn slot_seconds(&self) -> i64 {
        i64::from(self.slot_minutes) * 60
    }

    /// Slot duration `T` in hours.
    pub fn slot_hours(&self) -> f64 {
        f64::from(self.slot_minutes) / 60.0
    }

    pub fn slot_of_seconds(&self, seconds_of_day: u32) -> u32 {
        seconds_of_day / (self.slot_minutes * 60)
    }

    /// Hour of day at the middle of `slot`.
    pub fn slot_center_hour(&self, slot: u32) -> f64 {
        (f64::from(slot) + 0.5) * self.slot_hours()
    }

    pub fn check_slot(&self, slot: u32) -> Result<(), GridError> {
        if slot < self.slots_per_day() {
            Ok(())
        } else {
            Err(GridError::BadSlot { slot, slots_per_day: self.slots_per_day() })
        }
    }

    /// Every arrival-rate cell of the grid: 12 months × 2 day types × slots.
    pub fn slot_keys(&self) -> impl Iterator<Item = SlotKey> {
        let slots = self.slots_per_day();
        (1..=12u8).flat_map(move |month| {
            DayType::ALL.into_iter().flat_map(move |daytype| {
                (0..slots).map(move |slot| SlotKey { month, daytype, slot })
            })
        })
    }
}

/// Arrival-rate conditioning cell: (month, day type, time-of-day slot).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SlotKey {
    pub month: u8,
    pub daytype: DayType,
    pub slot: u32,
}

impl SlotKey {
    pub fn new(month: u32, daytype: DayType, slot: u32, grid: &TimeGrid) -> Result<Self, GridError> {
        let month = check_month(month)?;
        grid.check_slot(slot)?;
        Ok(Self { month, daytype, slot })
    }

    pub fn of(t: Timestamp, grid: &TimeGrid) -> Self {
        let date = t.date();
        Self {
            month: date.month() as u8,
            daytype: DayType::of(date),
            slot: grid.slot_of_seconds(t.seconds_of_day()),
        }
    }

    pub fn day_key(&self) -> DayKey {
        DayKey { month: self.month, daytype: self.daytype }
    }
}

impl fmt::Display for SlotKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(month {}, {}, slot {})", self.month, self.daytype.as_str(), self.slot)
    }
}

/// The (month, day type) pair; one rate curve is fitted per value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DayKey {
    pub month: u8,
    pub daytype: DayType,
}

/// Mixture conditioning cell: (month, time-of-day slot), optionally split by
/// day type when a bank is configured that way.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MixKey {
    pub month: u8,
    pub daytype: Option<DayType>,
    pub slot: u32,
}

impl MixKey {
    pub fn new(month: u32, slot: u32, grid: &TimeGrid) -> Result<Self, GridError> {
        let month = check_month(month)?;
        grid.check_slot(slot)?;
        Ok(Self { month, daytype: None, slot })
    }

    pub fn of(t: Timestamp, grid: &TimeGrid, by_daytype: bool) -> Self {
        let key = SlotKey::of(t, grid);
        Self {
            month: key.month,
            daytype: by_daytype.then_some(key.daytype),
            slot: key.slot,
        }
    }
}

impl fmt::Display for MixKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.daytype {
            Some(d) => write!(f, "(month {}, {}, slot {})", self.month, d.as_str(), self.slot),
            None => write!(f, "(month {}, slot {})", self.month, self.slot),
        }
    }
}

fn check_month(month: u32) -> Result<u8, GridError> {
    if (1..=12).contains(&month) {
        Ok(month as u8)
    } else {
        Err(GridError::BadMonth(month))
    }
}

/// Date range `[start, end)` over which arrivals are generated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Horizon {
    start: NaiveDate,
    end: NaiveDate,
}

impl Horizon {
    pub fn new(start: NaiveDate, end: NaiveDate) -> Result<Self, GridError> {
        if end <= start {
            return Err(GridError::EmptyHorizon);
        }
        Ok(Self { start, end })
    }

    /// Smallest whole-day horizon containing every given timestamp.
    pub fn covering(times: impl IntoIterator<Item = Timestamp>) -> Option<Self> {
        let mut bounds: Option<(Timestamp, Timestamp)> = None;
        for t in times {
            bounds = Some(match bounds {
                None => (t, t),
                Some((lo, hi)) => (lo.min(t), hi.max(t)),
            });
        }
        let (lo, hi) = bounds?;
        let end = date_from_epoch_days(hi.day_index() + 1);
        Some(Self { start: lo.date(), end })
    }

    pub fn start(&self) -> NaiveDate {
        self.start
    }

    pub fn end(&self) -> NaiveDate {
        self.end
    }

    pub fn start_timestamp(&self) -> Timestamp {
        Timestamp::from_date(self.start)
    }

    pub fn end_timestamp(&self) -> Timestamp {
        Timestamp::from_date(self.end)
    }

    pub fn days(&self) -> i64 {
        days_since_epoch(self.end) - days_since_epoch(self.start)
    }

    pub fn hours(&self) -> f64 {
        self.days() as f64 * 24.0
    }

    pub fn contains(&self, t: Timestamp) -> bool {
        self.start_timestamp() <= t && t < self.end_timestamp()
    }

    /// Every calendar occurrence of every slot, in chronological order.
    pub fn slot_occurrences<'g>(
        &self,
        grid: &'g TimeGrid,
    ) -> impl Iterator<Item = SlotOccurrence> + 'g {
        let first = days_since_epoch(self.start);
        let slots = grid.slots_per_day();
        let slot_seconds = grid.slot_seconds();
        (first..first + self.days()).flat_map(move |day| {
            let date = date_from_epoch_days(day);
            let month = date.month() as u8;
            let daytype = DayType::of(date);
            (0..slots).map(move |slot| SlotOccurrence {
                key: SlotKey { month, daytype, slot },
                start: Timestamp(day * SECONDS_PER_DAY + i64::from(slot) * slot_seconds),
            })
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SlotOccurrence {
    pub key: SlotKey,
    pub start: Timestamp,
}
