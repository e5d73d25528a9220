use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use rand::Rng;

use super::em::{em_fit, select_k, EmConfig};
use super::{Gmm, MixtureError};
use crate::rng::{derive_seed, seeded};
use crate::time::{DayType, MixKey, TimeGrid, Timestamp};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MixtureKind {
    ConnectedTime,
    Energy,
}

impl MixtureKind {
    pub fn as_str(self) -> &'static str {
        match self {
            MixtureKind::ConnectedTime => "connected_time",
            MixtureKind::Energy => "energy",
        }
    }
}

/// Gaussian mixtures keyed by arrival cell, plus a pooled fallback for cells
/// without a model.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureBank {
    kind: MixtureKind,
    by_daytype: bool,
    models: BTreeMap<MixKey, Gmm>,
    pooled_fallback: Gmm,
}

impl MixtureBank {
    pub fn new(
        kind: MixtureKind,
        by_daytype: bool,
        models: BTreeMap<MixKey, Gmm>,
        pooled_fallback: Gmm,
    ) -> Result<Self, MixtureError> {
        if let Some(key) = models.keys().find(|k| k.daytype.is_some() != by_daytype) {
            return Err(MixtureError::KeyMismatch(*key));
        }
        Ok(Self { kind, by_daytype, models, pooled_fallback })
    }

    pub fn kind(&self) -> MixtureKind {
        self.kind
    }

    pub fn by_daytype(&self) -> bool {
        self.by_daytype
    }

    pub fn models(&self) -> &BTreeMap<MixKey, Gmm> {
        &self.models
    }

    pub fn pooled_fallback(&self) -> &Gmm {
        &self.pooled_fallback
    }

    pub fn key_of(&self, t: Timestamp, grid: &TimeGrid) -> MixKey {
        MixKey::of(t, grid, self.by_daytype)
    }

    pub fn model_for(&self, key: &MixKey) -> &Gmm {
        self.models.get(key).unwrap_or(&self.pooled_fallback)
    }

    pub fn sample_at<R: Rng + ?Sized>(&self, t: Timestamp, grid: &TimeGrid, rng: &mut R) -> Result<f64, MixtureError> {
        self.model_for(&self.key_of(t, grid)).sample_positive(rng)
    }
}

/// Where each cell's model came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct BankFitStats {
    pub own_fits: usize,
    pub month_fallbacks: usize,
    pub global_fallbacks: usize,
}

const CELL_TAG: u64 = 1 << 60;
const MONTH_TAG: u64 = 2 << 60;
const POOLED_TAG: u64 = 3 << 60;

fn cell_label(key: &MixKey) -> u64 {
    let daytype = match key.daytype {
        None => 0,
        Some(DayType::Weekday) => 1,
        Some(DayType::Weekend) => 2,
    };
    CELL_TAG | (u64::from(key.month) << 40) | (daytype << 32) | u64::from(key.slot)
}

fn fit_pool(data: &[f64], cfg: &EmConfig, seed: u64) -> Result<Gmm, MixtureError> {
    let mut rng = seeded(seed);
    if data.len() >= 2 {
        Ok(select_k(data, cfg, &mut rng)?.fit.gmm)
    } else {
        Ok(em_fit(data, 1, cfg, &mut rng)?.gmm)
    }
}

/// Fits one mixture per cell with at least `min_cell_n` observations.
///
/// Smaller cells take the fit of their month's pooled data when that pool is
/// large enough, otherwise the global pooled fit. Every fit draws from a
/// sub-seed derived from its cell key, so results do not depend on fitting
/// order.
pub fn fit_mixture_bank(
    data: &BTreeMap<MixKey, Vec<f64>>,
    kind: MixtureKind,
    cfg: &EmConfig,
    seed: u64,
) -> Result<(MixtureBank, BankFitStats), MixtureError> {
    cfg.validate()?;
    let pooled: Vec<f64> = data.values().flatten().copied().collect();
    if pooled.is_empty() {
        return Err(MixtureError::EmptyTraining);
    }
    let by_daytype = data.keys().any(|k| k.daytype.is_some());
    let pooled_fallback = fit_pool(&pooled, cfg, derive_seed(seed, POOLED_TAG))?;

    let mut month_fits: BTreeMap<u8, Option<Gmm>> = BTreeMap::new();
    let mut models = BTreeMap::new();
    let mut stats = BankFitStats::default();
    for (key, values) in data.iter().filter(|(_, v)| !v.is_empty()) {
        let gmm = if values.len() >= cfg.min_cell_n {
            stats.own_fits += 1;
            fit_pool(values, cfg, derive_seed(seed, cell_label(key)))?
        } else {
            let month_fit = match month_fits.get(&key.month) {
                Some(fit) => fit.clone(),
                None => {
                    let month_data: Vec<f64> = data
                        .iter()
                        .filter(|(k, _)| k.month == key.month)
                        .flat_map(|(_, v)| v.iter().copied())
                        .collect();
                    let fit = if month_data.len() >= cfg.min_cell_n {
                        let label = MONTH_TAG | u64::from(key.month);
                        Some(fit_pool(&month_data, cfg, derive_seed(seed, label))?)
                    } else {
                        None
                    };
                    month_fits.insert(key.month, fit.clone());
                    fit
                }
            };
            match month_fit {
                Some(g) => {
                    stats.month_fallbacks += 1;
                    g
                }
                None => {
                    stats.global_fallbacks += 1;
                    pooled_fallback.clone()
                }
            }
        };
        models.insert(*key, gmm);
    }
    let bank = MixtureBank::new(kind, by_daytype, models, pooled_fallback)?;
    Ok((bank, stats))
}
