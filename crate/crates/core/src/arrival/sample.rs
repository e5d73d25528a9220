use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Distribution, Exp1};

use super::ArrivalModel;
use crate::time::{Horizon, SlotKey, Timestamp, SECONDS_PER_DAY};

/// How the inter-arrival sampler treats slot boundaries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum IatBoundaryPolicy {
    /// Draw each gap under the rate at the previous arrival and jump. A long
    /// gap drawn in a quiet slot skips any busier slots after it.
    Naive,
    /// Draw under the current slot's rate; if the gap crosses the slot end,
    /// restart from the boundary under the next slot's rate. Exact for a
    /// piecewise-constant rate by memorylessness.
    #[default]
    Restart,
}

/// Which arrival sampler a model uses by default.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ArrivalSampler {
    /// Exponential inter-arrival times.
    Iat,
    /// Per-slot counts from the count family, placed uniformly in the slot.
    #[default]
    Counts,
}

fn draw_gap_seconds<R: Rng + ?Sized>(rate_per_hour: f64, rng: &mut R) -> f64 {
    let e: f64 = Exp1.sample(rng);
    e / rate_per_hour * 3600.0
}

/// Keeps the output strictly increasing. Ties only arise when two arrivals
/// land within one floating-point ulp of each other.
fn push_increasing(out: &mut Vec<f64>, t: f64) {
    if out.last().is_none_or(|&last| t > last) {
        out.push(t);
    }
}

/// Arrival instants (seconds since the epoch, fractional) from exponential
/// inter-arrival times, using the model's boundary policy.
pub fn sample_arrivals_iat<R: Rng + ?Sized>(
    model: &ArrivalModel,
    horizon: &Horizon,
    rng: &mut R,
) -> Vec<f64> {
    let start = horizon.start_timestamp().seconds() as f64;
    let end = horizon.end_timestamp().seconds() as f64;
    let mut out = Vec::new();
    match model.iat_boundary_policy() {
        IatBoundaryPolicy::Naive => {
            let mut t = start;
            loop {
                t += draw_gap_seconds(model.rate().at_seconds(t), rng);
                if t >= end {
                    break;
                }
                push_increasing(&mut out, t);
            }
        }
        IatBoundaryPolicy::Restart => {
            let grid = *model.grid();
            let slot_seconds = grid.slot_seconds();
            let mut t = start;
            while t < end {
                let stamp = Timestamp::from_seconds(t as i64).expect("horizon in range");
                let key = SlotKey::of(stamp, &grid);
                let slot_end = (stamp.day_index() * SECONDS_PER_DAY
                    + i64::from(key.slot + 1) * slot_seconds) as f64;
                let boundary = slot_end.min(end);
                let next = t + draw_gap_seconds(model.rate().for_slot(&key), rng);
                if next >= boundary {
                    t = boundary;
                    continue;
                }
                t = next;
                push_increasing(&mut out, t);
            }
        }
    }
    out
}

/// Arrival instants from per-slot counts: `N ~ family(λ·T)` per slot
/// occurrence, each arrival placed uniformly inside its slot.
pub fn sample_arrivals_counts<R: Rng + ?Sized>(
    model: &ArrivalModel,
    horizon: &Horizon,
    rng: &mut R,
) -> Vec<f64> {
    let grid = *model.grid();
    let slot_seconds = grid.slot_seconds() as f64;
    let mut out = Vec::new();
    let mut within = Vec::new();
    for occurrence in horizon.slot_occurrences(&grid) {
        let mean = model.rate().for_slot(&occurrence.key) * grid.slot_hours();
        let n = model.counts().get(&occurrence.key).sample(mean, rng);
        let slot_start = occurrence.start.seconds() as f64;
        within.clear();
        within.extend((0..n).map(|_| slot_start + rng.random::<f64>() * slot_seconds));
        within.sort_by(f64::total_cmp);
        for &t in &within {
            push_increasing(&mut out, t);
        }
    }
    out
}
