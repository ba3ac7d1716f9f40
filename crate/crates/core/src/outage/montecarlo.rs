//! Monte Carlo estimators of capacity and outage. Trial `t` draws its channel
//! from stream `t` of the seeded generator, so results do not depend on the
//! thread count.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::beamforming::{beamform, Architecture, IterationSettings};
use crate::bounds::snr_upper_bound;
use crate::channel::{draw_channel, trial_rng};
use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::outage::curve::{outage_from_samples, CurveKind, OutageCurve, Z95};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub snr: f64,
    pub snr_ub: f64,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CapacityEstimate {
    /// Sample mean of `log₂(1 + Γ)`.
    pub mean: f64,
    pub std_err: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub trials: usize,
    /// Sample mean of `log₂(1 + Γ^UB)`.
    pub mean_capacity_ub: f64,
}

/// Sum with error growth `O(log n)`, independent of how work was scheduled.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 8 {
        return xs.iter().sum();
    }
    let (a, b) = xs.split_at(xs.len() / 2);
    pairwise_sum(a) + pairwise_sum(b)
}

/// Runs `trials` independent channel draws through one architecture.
pub fn simulate(
    cfg: &SystemConfig,
    arch: Architecture,
    trials: usize,
    seed: u64,
    settings: &IterationSettings,
) -> Result<Vec<TrialOutcome>> {
    cfg.validate()?;
    if trials == 0 {
        return Err(Error::Config("need at least one trial".into()));
    }
    let gamma = cfg.gamma();
    Ok((0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(seed, t);
            let ch = draw_channel(cfg, &mut rng);
            let res = beamform(&ch, arch, gamma, settings);
            TrialOutcome {
                snr: res.snr,
                snr_ub: snr_upper_bound(&ch, gamma),
                iterations: res.iterations,
                converged: res.converged,
            }
        })
        .collect())
}

pub fn curve_kind(arch: Architecture) -> CurveKind {
    match arch {
        Architecture::Fd => CurveKind::MonteCarloFd,
        Architecture::Fa => CurveKind::MonteCarloFa,
        Architecture::Mrt => CurveKind::MonteCarloMrt,
    }
}

/// Empirical outage `P[Γ < β]` with Wilson 95% intervals.
pub fn monte_carlo_outage(
    cfg: &SystemConfig,
    arch: Architecture,
    betas: &[f64],
    trials: usize,
    seed: u64,
    settings: &IterationSettings,
) -> Result<OutageCurve> {
    let outcomes = simulate(cfg, arch, trials, seed, settings)?;
    let snrs: Vec<f64> = outcomes.iter().map(|o| o.snr).collect();
    outage_from_samples(&snrs, betas, curve_kind(arch))
}

pub fn capacity_from_outcomes(outcomes: &[TrialOutcome]) -> Result<CapacityEstimate> {
    if outcomes.is_empty() {
        return Err(Error::Config("need at least one trial".into()));
    }
    let n = outcomes.len() as f64;
    let caps: Vec<f64> = outcomes.iter().map(|o| (1.0 + o.snr).log2()).collect();
    let ubs: Vec<f64> = outcomes.iter().map(|o| (1.0 + o.snr_ub).log2()).collect();
    let mean = pairwise_sum(&caps) / n;
    let sq: Vec<f64> = caps.iter().map(|c| (c - mean) * (c - mean)).collect();
    let var = if outcomes.len() > 1 { pairwise_sum(&sq) / (n - 1.0) } else { 0.0 };
    let std_err = (var / n).sqrt();
    Ok(CapacityEstimate {
        mean,
        std_err,
        ci_low: mean - Z95 * std_err,
        ci_high: mean + Z95 * std_err,
        trials: outcomes.len(),
        mean_capacity_ub: pairwise_sum(&ubs) / n,
    })
}

/// Ergodic capacity estimate, the sample mean of `log₂(1 + Γ)`.
pub fn monte_carlo_capacity(
    cfg: &SystemConfig,
    arch: Architecture,
    trials: usize,
    seed: u64,
    settings: &IterationSettings,
) -> Result<CapacityEstimate> {
    capacity_from_outcomes(&simulate(cfg, arch, trials, seed, settings)?)
}

/// Fraction of trials whose SNR exceeds `Γ^UB` by more than a relative `1e-9`.
pub fn bound_violation_rate(outcomes: &[TrialOutcome]) -> f64 {
    if outcomes.is_empty() {
        return 0.0;
    }
    let bad = outcomes.iter().filter(|o| o.snr > o.snr_ub * (1.0 + 1e-9)).count();
    bad as f64 / outcomes.len() as f64
}
