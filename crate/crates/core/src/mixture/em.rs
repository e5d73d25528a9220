//! Expectation–maximization for one-dimensional Gaussian mixtures, with
//! BIC-based choice of the component count.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use super::gmm::Gmm;
use super::MixtureError;
use crate::{math, stats};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmConfig {
    pub max_iter: usize,
    /// Stop once the relative log-likelihood improvement falls below this.
    pub tol: f64,
    /// Random initializations per component count; the best one is kept.
    pub restarts: usize,
    pub k_max: usize,
    /// Component variances never drop below this factor times the data variance.
    pub variance_floor_factor: f64,
    /// Cells with fewer observations borrow a pooled fit.
    pub min_cell_n: usize,
}

impl Default for EmConfig {
    fn default() -> Self {
        Self {
            max_iter: 500,
            tol: 1e-8,
            restarts: 5,
            k_max: 8,
            variance_floor_factor: 1e-6,
            min_cell_n: 50,
        }
    }
}

impl EmConfig {
    pub fn validate(&self) -> Result<(), MixtureError> {
        let positive_ints = self.max_iter > 0 && self.restarts > 0 && self.k_max > 0 && self.min_cell_n > 0;
        let positive_reals = self.tol > 0.0 && self.variance_floor_factor > 0.0;
        if positive_ints && positive_reals {
            Ok(())
        } else {
            Err(MixtureError::InvalidConfig)
        }
    }
}

/// Result of one EM fit.
#[derive(Debug, Clone, PartialEq)]
pub struct EmFit {
    pub gmm: Gmm,
    pub log_likelihood: f64,
    /// M-steps performed by the winning initialization.
    pub iterations: usize,
    /// Log-likelihood before the first M-step and after every M-step.
    pub trace: Vec<f64>,
}

struct Params {
    weights: Vec<f64>,
    means: Vec<f64>,
    vars: Vec<f64>,
}

fn variance_floor(var: f64, mean: f64, factor: f64) -> f64 {
    if var > 0.0 {
        factor * var
    } else {
        // Constant data: scale the floor by the magnitude of the value.
        factor * (mean * mean).max(1.0)
    }
}

/// Fits a `k`-component mixture, keeping the best of `cfg.restarts`
/// initializations (a single one for `k = 1`).
pub fn em_fit<R: Rng + ?Sized>(
    data: &[f64],
    k: usize,
    cfg: &EmConfig,
    rng: &mut R,
) -> Result<EmFit, MixtureError> {
    cfg.validate()?;
    if k == 0 || data.len() < k {
        return Err(MixtureError::InsufficientData { n: data.len(), k });
    }
    if data.iter().any(|x| !x.is_finite()) {
        return Err(MixtureError::NonFiniteData);
    }
    let sorted = stats::sorted(data);
    let mean = stats::mean(data).expect("non-empty");
    let var = stats::population_variance(data).expect("non-empty");
    let floor = variance_floor(var, mean, cfg.variance_floor_factor);

    let runs = if k == 1 { 1 } else { cfg.restarts };
    let mut best: Option<EmFit> = None;
    for run in 0..runs {
        let init = initial_params(&sorted, k, var.max(floor), run, rng);
        let fit = run_em(data, init, floor, cfg);
        if best.as_ref().is_none_or(|b| fit.log_likelihood > b.log_likelihood) {
            best = Some(fit);
        }
    }
    Ok(best.expect("at least one run"))
}

/// Means at evenly spaced sample quantiles, jittered on every run but the first.
fn initial_params<R: Rng + ?Sized>(sorted: &[f64], k: usize, var: f64, run: usize, rng: &mut R) -> Params {
    let kf = k as f64;
    let means = (0..k)
        .map(|j| {
            let mut q = (j as f64 + 0.5) / kf;
            if run > 0 {
                q = (q + (rng.random::<f64>() - 0.5) / kf).clamp(0.0, 1.0);
            }
            stats::quantile_sorted(sorted, q).expect("non-empty")
        })
        .collect();
    Params { weights: vec![1.0 / kf; k], means, vars: vec![var; k] }
}

fn run_em(data: &[f64], mut p: Params, floor: f64, cfg: &EmConfig) -> EmFit {
    let k = p.weights.len();
    let mut resp = vec![0.0; data.len() * k];
    let mut ll = e_step(data, &p, &mut resp);
    let mut trace = vec![ll];
    let mut iterations = 0;
    while iterations < cfg.max_iter {
        m_step(data, &resp, &mut p, floor);
        iterations += 1;
        let next = e_step(data, &p, &mut resp);
        trace.push(next);
        let improvement = next - ll;
        let scale = ll.abs().max(1.0);
        ll = next;
        if improvement < cfg.tol * scale {
            break;
        }
    }
    EmFit { gmm: finish(p), log_likelihood: ll, iterations, trace }
}

/// Fills responsibilities and returns the log-likelihood of the current parameters.
fn e_step(data: &[f64], p: &Params, resp: &mut [f64]) -> f64 {
    let k = p.weights.len();
    // log w_j − ½ ln(2π σ_j²), and −1/(2σ_j²)
    let offset: Vec<f64> = (0..k)
        .map(|j| math::ln(p.weights[j]) - 0.5 * (math::LN_2PI + math::ln(p.vars[j])))
        .collect();
    let scale: Vec<f64> = p.vars.iter().map(|&v| -0.5 / v).collect();
    let mut ll = 0.0;
    for (x, row) in data.iter().zip(resp.chunks_exact_mut(k)) {
        let mut max = f64::NEG_INFINITY;
        for j in 0..k {
            let d = x - p.means[j];
            row[j] = offset[j] + scale[j] * d * d;
            max = max.max(row[j]);
        }
        let mut total = 0.0;
        for r in row.iter_mut() {
            *r = math::exp(*r - max);
            total += *r;
        }
        let inv = 1.0 / total;
        for r in row.iter_mut() {
            *r *= inv;
        }
        ll += max + math::ln(total);
    }
    ll
}

/// Closed-form updates; variances are floored, empty components keep their
/// location and get zero weight.
fn m_step(data: &[f64], resp: &[f64], p: &mut Params, floor: f64) {
    let k = p.weights.len();
    let n = data.len() as f64;
    let mut mass = vec![0.0; k];
    let mut sum = vec![0.0; k];
    for (x, row) in data.iter().zip(resp.chunks_exact(k)) {
        for j in 0..k {
            mass[j] += row[j];
            sum[j] += row[j] * x;
        }
    }
    let means: Vec<f64> = (0..k)
        .map(|j| if mass[j] > 0.0 { sum[j] / mass[j] } else { p.means[j] })
        .collect();
    let mut ss = vec![0.0; k];
    for (x, row) in data.iter().zip(resp.chunks_exact(k)) {
        for j in 0..k {
            let d = x - means[j];
            ss[j] += row[j] * d * d;
        }
    }
    for j in 0..k {
        p.weights[j] = mass[j] / n;
        if mass[j] > 0.0 {
            p.means[j] = means[j];
            p.vars[j] = (ss[j] / mass[j]).max(floor);
        }
    }
}

fn finish(p: Params) -> Gmm {
    let keep: Vec<usize> = (0..p.weights.len()).filter(|&j| p.weights[j] > 0.0).collect();
    let total: f64 = keep.iter().map(|&j| p.weights[j]).sum();
    let weights = keep.iter().map(|&j| p.weights[j] / total).collect();
    let means = keep.iter().map(|&j| p.means[j]).collect();
    let stddevs = keep.iter().map(|&j| math::sqrt(p.vars[j])).collect();
    Gmm::new(weights, means, stddevs).expect("EM keeps parameters valid")
}

/// `−2·LL + (3k − 1)·ln n`.
pub fn bic(log_likelihood: f64, k: usize, n: usize) -> f64 {
    -2.0 * log_likelihood + (3 * k - 1) as f64 * math::ln(n as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct KSelection {
    pub k: usize,
    pub fit: EmFit,
    pub bic: f64,
    /// BIC of every candidate, index `k - 1`.
    pub bics: Vec<f64>,
}

/// Consecutive BIC increases after which larger component counts are skipped.
pub const BIC_PATIENCE: usize = 2;

/// Fits `k = 1 ..= min(k_max, ⌊n/10⌋)` components and keeps the lowest BIC.
///
/// The search stops early once BIC has risen [`BIC_PATIENCE`] times in a row;
/// `bics` then holds only the candidates actually fitted.
pub fn select_k<R: Rng + ?Sized>(data: &[f64], cfg: &EmConfig, rng: &mut R) -> Result<KSelection, MixtureError> {
    let n = data.len();
    if n < 2 {
        return Err(MixtureError::InsufficientData { n, k: 1 });
    }
    let k_max = cfg.k_max.min(n / 10).max(1);
    let mut best: Option<(usize, EmFit, f64)> = None;
    let mut bics = Vec::with_capacity(k_max);
    for k in 1..=k_max {
        let fit = em_fit(data, k, cfg, rng)?;
        let score = bic(fit.log_likelihood, fit.gmm.k(), n);
        bics.push(score);
        if best.as_ref().is_none_or(|(_, _, b)| score < *b) {
            best = Some((k, fit, score));
        }
        let rising = bics.windows(2).rev().take_while(|w| w[1] > w[0]).count();
        if rising >= BIC_PATIENCE {
            break;
        }
    }
    let (k, fit, bic) = best.expect("k_max >= 1");
    Ok(KSelection { k, fit, bic, bics })
}
