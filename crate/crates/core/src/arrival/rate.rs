use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::f64::consts::PI;

use super::ArrivalError;
use crate::math;
use crate::time::{DayKey, SlotKey, TimeGrid, Timestamp, SECONDS_PER_DAY};

/// Lower and upper clamp for every arrival rate, in arrivals per hour.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateBounds {
    min: f64,
    max: f64,
}

impl Default for RateBounds {
    fn default() -> Self {
        Self { min: 1e-6, max: 1000.0 }
    }
}

impl RateBounds {
    pub fn new(min: f64, max: f64) -> Result<Self, ArrivalError> {
        if !(min.is_finite() && max.is_finite() && min > 0.0 && max > min) {
            return Err(ArrivalError::InvalidBounds { min, max });
        }
        Ok(Self { min, max })
    }

    pub fn min(&self) -> f64 {
        self.min
    }

    pub fn max(&self) -> f64 {
        self.max
    }

    pub fn clamp(&self, rate: f64) -> f64 {
        rate.clamp(self.min, self.max)
    }

    pub fn contains(&self, rate: f64) -> bool {
        (self.min..=self.max).contains(&rate)
    }
}

/// Piecewise-constant arrival rate: one value per slot key of the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct LambdaTable {
    grid: TimeGrid,
    bounds: RateBounds,
    values: BTreeMap<SlotKey, f64>,
}

impl LambdaTable {
    /// Builds a table, requiring a value within bounds for every key of the grid.
    pub fn new(
        grid: TimeGrid,
        bounds: RateBounds,
        values: BTreeMap<SlotKey, f64>,
    ) -> Result<Self, ArrivalError> {
        for key in grid.slot_keys() {
            match values.get(&key) {
                None => return Err(ArrivalError::IncompleteTable(key)),
                Some(&v) if !bounds.contains(v) => {
                    return Err(ArrivalError::RateOutOfBounds { key, rate: v })
                }
                Some(_) => {}
            }
        }
        if values.len() != grid.slot_keys().count() {
            return Err(ArrivalError::GridMismatch);
        }
        Ok(Self { grid, bounds, values })
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn bounds(&self) -> RateBounds {
        self.bounds
    }

    pub fn get(&self, key: &SlotKey) -> f64 {
        self.values[key]
    }

    pub fn values(&self) -> &BTreeMap<SlotKey, f64> {
        &self.values
    }
}

/// Exposure-based rate estimate per slot key: arrivals divided by observed
/// hours, clamped to `bounds`.
///
/// Keys without observation time take the pooled rate of their (month, day
/// type), then the global pooled rate, then the lower bound.
pub fn fit_lambda_piecewise(
    counts: &BTreeMap<SlotKey, Vec<u32>>,
    observed_hours: &BTreeMap<SlotKey, f64>,
    grid: &TimeGrid,
    bounds: RateBounds,
) -> Result<LambdaTable, ArrivalError> {
    let mut raw: BTreeMap<SlotKey, (f64, f64)> = BTreeMap::new();
    for (key, c) in counts {
        let hours = observed_hours.get(key).copied().unwrap_or(0.0);
        let arrivals: f64 = c.iter().map(|&n| f64::from(n)).sum();
        raw.insert(*key, (arrivals, hours));
    }
    let total_hours: f64 = raw.values().map(|&(_, h)| h).sum();
    if raw.is_empty() || total_hours <= 0.0 {
        return Err(ArrivalError::EmptyTraining);
    }

    let mut pooled: BTreeMap<DayKey, (f64, f64)> = BTreeMap::new();
    let mut global = (0.0, 0.0);
    for (key, &(a, h)) in &raw {
        let p = pooled.entry(key.day_key()).or_insert((0.0, 0.0));
        p.0 += a;
        p.1 += h;
        global.0 += a;
        global.1 += h;
    }

    let rate_of = |(a, h): (f64, f64)| (h > 0.0).then(|| a / h);
    let values = grid
        .slot_keys()
        .map(|key| {
            let estimate = raw
                .get(&key)
                .copied()
                .and_then(rate_of)
                .or_else(|| pooled.get(&key.day_key()).copied().and_then(rate_of))
                .or_else(|| rate_of(global))
                .unwrap_or(bounds.min());
            (key, bounds.clamp(estimate))
        })
        .collect();
    LambdaTable::new(*grid, bounds, values)
}

/// Truncated Fourier series over the 24-hour day.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierSeries {
    pub a0: f64,
    pub cos: Vec<f64>,
    pub sin: Vec<f64>,
}

impl FourierSeries {
    pub fn order(&self) -> usize {
        self.cos.len()
    }

    pub fn eval(&self, hour_of_day: f64) -> f64 {
        let w = 2.0 * PI * hour_of_day / 24.0;
        let mut acc = self.a0;
        for (k, (a, b)) in self.cos.iter().zip(&self.sin).enumerate() {
            let kw = (k + 1) as f64 * w;
            acc += a * math::cos(kw) + b * math::sin(kw);
        }
        acc
    }
}

/// Smooth arrival rate: a Fourier series on log-rate per (month, day type),
/// exponentiated and clamped to the bounds when evaluated.
#[derive(Debug, Clone, PartialEq)]
pub struct LambdaCurve {
    grid: TimeGrid,
    bounds: RateBounds,
    order: usize,
    series: BTreeMap<DayKey, FourierSeries>,
}

impl LambdaCurve {
    pub fn new(
        grid: TimeGrid,
        bounds: RateBounds,
        order: usize,
        series: BTreeMap<DayKey, FourierSeries>,
    ) -> Result<Self, ArrivalError> {
        check_order(order, &grid)?;
        if series.len() != 24 {
            return Err(ArrivalError::GridMismatch);
        }
        for month in 1..=12u8 {
            for daytype in crate::time::DayType::ALL {
                if !series.contains_key(&DayKey { month, daytype }) {
                    return Err(ArrivalError::GridMismatch);
                }
            }
        }
        for s in series.values() {
            if s.cos.len() != order || s.sin.len() != order {
                return Err(ArrivalError::GridMismatch);
            }
            if !(s.a0.is_finite() && s.cos.iter().chain(&s.sin).all(|c| c.is_finite())) {
                return Err(ArrivalError::NonFiniteCoefficient);
            }
        }
        Ok(Self { grid, bounds, order, series })
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn bounds(&self) -> RateBounds {
        self.bounds
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn series(&self) -> &BTreeMap<DayKey, FourierSeries> {
        &self.series
    }

    /// Rate at a fractional hour of day, clamped into the bounds.
    pub fn eval(&self, day: DayKey, hour_of_day: f64) -> f64 {
        let log_rate = self.series[&day].eval(hour_of_day);
        self.bounds.clamp(math::exp(log_rate))
    }
}

fn check_order(order: usize, grid: &TimeGrid) -> Result<(), ArrivalError> {
    let slots = grid.slots_per_day() as usize;
    if 2 * order + 1 > slots {
        return Err(ArrivalError::OrderTooHigh { order, slots_per_day: slots });
    }
    Ok(())
}

/// Least-squares fit of a log-rate Fourier series of order `order` to each
/// (month, day type) row of a table, sampled at slot-center hours.
///
/// On an equispaced grid with `2K + 1 <= N` the basis columns are mutually
/// orthogonal, so the least-squares coefficients are the discrete projections.
pub fn fit_lambda_curve(table: &LambdaTable, order: usize) -> Result<LambdaCurve, ArrivalError> {
    let grid = *table.grid();
    check_order(order, &grid)?;
    let n = grid.slots_per_day();
    let mut series = BTreeMap::new();
    for month in 1..=12u8 {
        for daytype in crate::time::DayType::ALL {
            let day = DayKey { month, daytype };
            let samples: Vec<(f64, f64)> = (0..n)
                .map(|slot| {
                    let key = SlotKey { month, daytype, slot };
                    (grid.slot_center_hour(slot), math::ln(table.get(&key)))
                })
                .collect();
            series.insert(day, project(&samples, order));
        }
    }
    LambdaCurve::new(grid, table.bounds(), order, series)
}

fn project(samples: &[(f64, f64)], order: usize) -> FourierSeries {
    let n = samples.len() as f64;
    let a0 = samples.iter().map(|&(_, y)| y).sum::<f64>() / n;
    let mut cos = Vec::with_capacity(order);
    let mut sin = Vec::with_capacity(order);
    for k in 1..=order {
        let (mut a, mut b) = (0.0, 0.0);
        for &(h, y) in samples {
            let kw = 2.0 * PI * k as f64 * h / 24.0;
            a += y * math::cos(kw);
            b += y * math::sin(kw);
        }
        cos.push(2.0 * a / n);
        sin.push(2.0 * b / n);
    }
    FourierSeries { a0, cos, sin }
}

/// Either representation of λ(month, day type, time of day).
#[derive(Debug, Clone, PartialEq)]
pub enum ArrivalRate {
    Table(LambdaTable),
    Curve(LambdaCurve),
}

impl ArrivalRate {
    pub fn grid(&self) -> &TimeGrid {
        match self {
            ArrivalRate::Table(t) => t.grid(),
            ArrivalRate::Curve(c) => c.grid(),
        }
    }

    pub fn bounds(&self) -> RateBounds {
        match self {
            ArrivalRate::Table(t) => t.bounds(),
            ArrivalRate::Curve(c) => c.bounds(),
        }
    }

    /// Rate at a continuous time given in seconds since the epoch.
    pub fn at_seconds(&self, t: f64) -> f64 {
        let whole = math::floor(t) as i64;
        let stamp = Timestamp::from_seconds(whole).expect("sampling time in calendar range");
        let key = SlotKey::of(stamp, self.grid());
        match self {
            ArrivalRate::Table(table) => table.get(&key),
            ArrivalRate::Curve(curve) => {
                let secs = t - (stamp.day_index() * SECONDS_PER_DAY) as f64;
                curve.eval(key.day_key(), secs / 3600.0)
            }
        }
    }

    pub fn at(&self, t: Timestamp) -> f64 {
        self.at_seconds(t.seconds() as f64)
    }

    /// Constant rate used for a whole slot: the table value, or the curve at
    /// the slot's center.
    pub fn for_slot(&self, key: &SlotKey) -> f64 {
        match self {
            ArrivalRate::Table(table) => table.get(key),
            ArrivalRate::Curve(curve) => {
                curve.eval(key.day_key(), curve.grid().slot_center_hour(key.slot))
            }
        }
    }
}
