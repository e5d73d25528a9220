//! Fitting a complete [`SdgModel`] from session records.

use alloc::string::String;
use alloc::vec::Vec;

use thiserror::Error;

use crate::arrival::{
    fit_count_family, fit_lambda_curve, fit_lambda_piecewise, ArrivalError, ArrivalModel, ArrivalRate,
    ArrivalSampler, CountFamily, IatBoundaryPolicy, OverdispersionRule, RateBounds,
};
use crate::buckets::{BucketError, TrainingBuckets};
use crate::generator::{GenerateError, ModelMeta, SdgModel, SCHEMA_VERSION};
use crate::mixture::{fit_mixture_bank, BankFitStats, EmConfig, MixtureError, MixtureKind};
use crate::rng::derive_seed;
use crate::session::Session;
use crate::time::{Horizon, TimeGrid};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LambdaMode {
    /// Per-slot averages.
    #[default]
    Piecewise,
    /// Log-rate Fourier series of the given order fitted to the averages.
    Smooth { order: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub grid: TimeGrid,
    pub bounds: RateBounds,
    pub lambda_mode: LambdaMode,
    /// `None` keeps every slot Poisson.
    pub count_rule: Option<OverdispersionRule>,
    pub iat_boundary_policy: IatBoundaryPolicy,
    pub sampler: ArrivalSampler,
    pub em: EmConfig,
    pub mixture_by_daytype: bool,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            grid: TimeGrid::default(),
            bounds: RateBounds::default(),
            lambda_mode: LambdaMode::Piecewise,
            count_rule: Some(OverdispersionRule::default()),
            iat_boundary_policy: IatBoundaryPolicy::Restart,
            sampler: ArrivalSampler::Counts,
            em: EmConfig::default(),
            mixture_by_daytype: false,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TrainError {
    #[error("no sessions to train on")]
    EmptyTraining,
    #[error(transparent)]
    Bucket(#[from] BucketError),
    #[error("arrival model: {0}")]
    Arrival(#[from] ArrivalError),
    #[error("{kind} mixture: {source}")]
    Mixture { kind: &'static str, source: MixtureError },
    #[error("assembling model: {0}")]
    Model(#[from] GenerateError),
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: SdgModel,
    pub buckets: TrainingBuckets,
    /// Whole days spanned by the training arrivals.
    pub horizon: Horizon,
    pub connected_stats: BankFitStats,
    pub energy_stats: BankFitStats,
}

pub fn fit_arrival_model(buckets: &TrainingBuckets, cfg: &TrainConfig) -> Result<ArrivalModel, ArrivalError> {
    let table = fit_lambda_piecewise(&buckets.counts, &buckets.observed_hours, &cfg.grid, cfg.bounds)?;
    let rate = match cfg.lambda_mode {
        LambdaMode::Piecewise => ArrivalRate::Table(table),
        LambdaMode::Smooth { order } => ArrivalRate::Curve(fit_lambda_curve(&table, order)?),
    };
    let counts = match &cfg.count_rule {
        Some(rule) => fit_count_family(&buckets.counts, rule),
        None => CountFamily::poisson(),
    };
    ArrivalModel::new(rate, counts, cfg.iat_boundary_policy, cfg.sampler)
}

/// Buckets the sessions over the whole days they span and fits all three
/// submodels.
pub fn train(sessions: &[Session], cfg: &TrainConfig) -> Result<TrainOutcome, TrainError> {
    let mut sorted: Vec<Session> = sessions.to_vec();
    sorted.sort_by_key(Session::arrival);
    let horizon = Horizon::covering(sorted.iter().map(Session::arrival)).ok_or(TrainError::EmptyTraining)?;
    let buckets = TrainingBuckets::from_sessions(&sorted, &cfg.grid, &horizon, cfg.mixture_by_daytype)?;

    let arrival = fit_arrival_model(&buckets, cfg)?;
    let (connected, connected_stats) =
        fit_mixture_bank(&buckets.durations, MixtureKind::ConnectedTime, &cfg.em, derive_seed(cfg.seed, 1))
            .map_err(|source| TrainError::Mixture { kind: "connected_time", source })?;
    let (energy, energy_stats) =
        fit_mixture_bank(&buckets.energies, MixtureKind::Energy, &cfg.em, derive_seed(cfg.seed, 2))
            .map_err(|source| TrainError::Mixture { kind: "energy", source })?;

    let meta = ModelMeta {
        schema_version: String::from(SCHEMA_VERSION),
        trained_at: horizon.end_timestamp(),
        n_training_sessions: sorted.len() as u64,
    };
    let model = SdgModel::new(arrival, connected, energy, meta)?;
    Ok(TrainOutcome { model, buckets, horizon, connected_stats, energy_stats })
}
