//! End-to-end synthesis: arrivals, then a connected time and an energy per
//! arrival, then departure = arrival + connected time.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use thiserror::Error;

use crate::arrival::{ArrivalModel, ArrivalSampler};
use crate::math;
use crate::mixture::{MixtureBank, MixtureError, MixtureKind};
use crate::rng::seeded;
use crate::session::Session;
use crate::time::{Horizon, TimeGrid, Timestamp};

pub const SCHEMA_VERSION: &str = "1";
/// Redraws of an over-long connected time before it is clamped.
pub const MAX_DURATION_REDRAWS: usize = 100;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GenerateError {
    #[error("{kind} mixture: {source}")]
    Mixture { kind: &'static str, source: MixtureError },
    #[error("max_duration_hours must be positive and finite")]
    InvalidMaxDuration,
    #[error("model parts disagree: {0}")]
    Inconsistent(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelMeta {
    pub schema_version: String,
    /// End of the training data window.
    pub trained_at: Timestamp,
    pub n_training_sessions: u64,
}

/// The shareable trained generator: parameters only, no training records.
#[derive(Debug, Clone, PartialEq)]
pub struct SdgModel {
    arrival: ArrivalModel,
    connected: MixtureBank,
    energy: MixtureBank,
    meta: ModelMeta,
}

impl SdgModel {
    pub fn new(
        arrival: ArrivalModel,
        connected: MixtureBank,
        energy: MixtureBank,
        meta: ModelMeta,
    ) -> Result<Self, GenerateError> {
        if connected.kind() != MixtureKind::ConnectedTime || energy.kind() != MixtureKind::Energy {
            return Err(GenerateError::Inconsistent("mixture banks are of the wrong kind".into()));
        }
        let slots = arrival.grid().slots_per_day();
        for bank in [&connected, &energy] {
            if let Some(key) = bank.models().keys().find(|k| k.slot >= slots) {
                return Err(GenerateError::Inconsistent(alloc::format!(
                    "{} cell {key} is outside the time grid",
                    bank.kind().as_str()
                )));
            }
        }
        if meta.schema_version != SCHEMA_VERSION {
            return Err(GenerateError::Inconsistent(alloc::format!(
                "schema version {} is not {SCHEMA_VERSION}",
                meta.schema_version
            )));
        }
        Ok(Self { arrival, connected, energy, meta })
    }

    pub fn grid(&self) -> &TimeGrid {
        self.arrival.grid()
    }

    pub fn arrival(&self) -> &ArrivalModel {
        &self.arrival
    }

    pub fn connected(&self) -> &MixtureBank {
        &self.connected
    }

    pub fn energy(&self) -> &MixtureBank {
        &self.energy
    }

    pub fn meta(&self) -> &ModelMeta {
        &self.meta
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenerationConfig {
    pub horizon: Horizon,
    pub seed: u64,
    pub arrival_mode: ArrivalSampler,
    pub max_duration_hours: f64,
}

impl GenerationConfig {
    pub fn new(horizon: Horizon, seed: u64, arrival_mode: ArrivalSampler) -> Self {
        Self { horizon, seed, arrival_mode, max_duration_hours: 168.0 }
    }
}

fn mixture_err(bank: &MixtureBank) -> impl Fn(MixtureError) -> GenerateError + '_ {
    move |source| GenerateError::Mixture { kind: bank.kind().as_str(), source }
}

/// Generates sessions sorted by arrival. A given model and config always
/// produce the same sessions.
pub fn generate_sessions(model: &SdgModel, cfg: &GenerationConfig) -> Result<Vec<Session>, GenerateError> {
    if !(cfg.max_duration_hours.is_finite() && cfg.max_duration_hours > 0.0) {
        return Err(GenerateError::InvalidMaxDuration);
    }
    let grid = *model.grid();
    let mut rng = seeded(cfg.seed);
    let arrivals = model.arrival.sample(&cfg.horizon, cfg.arrival_mode, &mut rng);
    let mut sessions = Vec::with_capacity(arrivals.len());
    for t in arrivals {
        let arrival = Timestamp::from_seconds(math::floor(t) as i64).expect("arrival inside horizon");
        let duration_model = model.connected.model_for(&model.connected.key_of(arrival, &grid));
        let mut hours = duration_model.sample_positive(&mut rng).map_err(mixture_err(&model.connected))?;
        let mut redraws = 0;
        while hours > cfg.max_duration_hours && redraws < MAX_DURATION_REDRAWS {
            hours = duration_model.sample_positive(&mut rng).map_err(mixture_err(&model.connected))?;
            redraws += 1;
        }
        let hours = hours.min(cfg.max_duration_hours);
        let energy = model
            .energy
            .sample_at(arrival, &grid, &mut rng)
            .map_err(mixture_err(&model.energy))?;

        let seconds = (math::round(hours * 3600.0) as i64).max(1);
        let departure = arrival.checked_add_seconds(seconds).expect("bounded duration");
        let session = Session::new(arrival, departure, energy)
            .map_err(|e| GenerateError::Inconsistent(e.to_string()))?;
        sessions.push(session);
    }
    Ok(sessions)
}
