//! Trainable synthetic data generator for electric-vehicle charging sessions.
//!
//! A fitted [`SdgModel`] is three parts:
//!
//! * an arrival model: an hourly arrival rate λ conditioned on month, day type
//!   and time-of-day slot, plus a per-slot count family (Poisson or negative
//!   binomial);
//! * a Gaussian mixture bank for connected time;
//! * a Gaussian mixture bank for charged energy.
//!
//! Sessions are generated by sampling arrivals over a horizon, then drawing a
//! connected time and an energy for each arrival from the banks keyed by the
//! arrival's (month, slot). Departure is arrival plus connected time.
//!
//! This crate is `no_std` (it needs `alloc`); the `std` feature switches
//! transcendental functions to the platform's faster implementations. File formats, CSV ingestion and
//! the command-line tool live in the `evsdg` crate.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;
#[cfg(any(test, feature = "std"))]
extern crate std;

pub mod arrival;
pub mod buckets;
pub mod generator;
mod math;
pub mod mixture;
pub mod reference;
pub mod rng;
pub mod session;
pub mod stats;
pub mod summary;
pub mod time;
pub mod train;
pub mod validate;

pub use arrival::{
    ArrivalError, ArrivalModel, ArrivalRate, ArrivalSampler, CountDist, CountFamily,
    IatBoundaryPolicy, LambdaCurve, LambdaTable, OverdispersionRule, RateBounds,
};
pub use buckets::{BucketError, TrainingBuckets};
pub use generator::{generate_sessions, GenerateError, GenerationConfig, ModelMeta, SdgModel};
pub use mixture::{EmConfig, Gmm, MixtureBank, MixtureError, MixtureKind};
pub use rng::SdgRng;
pub use session::{Session, SessionError};
pub use time::{DayKey, DayType, GridError, Horizon, MixKey, SlotKey, TimeGrid, Timestamp};
pub use train::{train, LambdaMode, TrainConfig, TrainError, TrainOutcome};
