//! Gaussian mixture models for connected time and charged energy.

mod bank;
mod em;
mod gmm;

use alloc::string::String;

use thiserror::Error;

pub use bank::{fit_mixture_bank, BankFitStats, MixtureBank, MixtureKind};
pub use em::{bic, em_fit, select_k, EmConfig, EmFit, KSelection, BIC_PATIENCE};
pub use gmm::{Gmm, MAX_POSITIVE_ATTEMPTS, WEIGHT_SUM_TOLERANCE};

use crate::time::MixKey;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MixtureError {
    #[error("need at least {k} observations for {k} components, got {n}")]
    InsufficientData { n: usize, k: usize },
    #[error("no mixture training data")]
    EmptyTraining,
    #[error("training data contains non-finite values")]
    NonFiniteData,
    #[error("model cannot produce a positive sample")]
    DegenerateModel,
    #[error("invalid mixture: {0}")]
    InvalidModel(String),
    #[error("EM configuration values must all be positive")]
    InvalidConfig,
    #[error("cell {0} does not match the bank's day-type setting")]
    KeyMismatch(MixKey),
}

impl MixtureError {
    pub(crate) fn invalid(reason: &str) -> Self {
        MixtureError::InvalidModel(String::from(reason))
    }
}
