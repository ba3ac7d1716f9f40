use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::outage::inversion::{invert_mgf_to_cdf, EulerSettings};
use crate::outage::mgf::MgfEvaluator;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CurveKind {
    AnalyticalLowerBound,
    MonteCarloFd,
    MonteCarloFa,
    MonteCarloMrt,
}

impl CurveKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            CurveKind::AnalyticalLowerBound => "analytical_lower_bound",
            CurveKind::MonteCarloFd => "monte_carlo_fd",
            CurveKind::MonteCarloFa => "monte_carlo_fa",
            CurveKind::MonteCarloMrt => "monte_carlo_mrt",
        }
    }
}

/// Outage probability against linear SNR thresholds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutageCurve {
    pub kind: CurveKind,
    /// Thresholds β (linear SNR), ascending.
    pub thresholds: Vec<f64>,
    pub probabilities: Vec<f64>,
    /// 95% interval; equal to the point value for analytic curves.
    pub ci_low: Vec<f64>,
    pub ci_high: Vec<f64>,
    pub trials: Option<usize>,
}

impl OutageCurve {
    pub fn len(&self) -> usize {
        self.thresholds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.thresholds.is_empty()
    }

    /// Writes `beta_db,p_out,ci_low,ci_high,kind` rows.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["beta_db", "p_out", "ci_low", "ci_high", "kind"])?;
        for i in 0..self.len() {
            w.write_record([
                format!("{:?}", 10.0 * self.thresholds[i].log10()),
                format!("{:?}", self.probabilities[i]),
                format!("{:?}", self.ci_low[i]),
                format!("{:?}", self.ci_high[i]),
                self.kind.as_str().to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Wilson score interval for `successes` out of `trials` at normal quantile `z`.
pub fn wilson_interval(successes: usize, trials: usize, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    let lo = if successes == 0 { 0.0 } else { (center - half).max(0.0) };
    let hi = if successes == trials { 1.0 } else { (center + half).min(1.0) };
    (lo, hi)
}

pub const Z95: f64 = 1.959_963_984_540_054;

/// Map from SNR threshold `β` to the envelope-sum threshold `y` of the bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundScaling {
    /// `Γ^UB = (γ/M)‖E‖₁,₁²`, so `y = √(βM/γ)`.
    #[default]
    PerAntenna,
    /// `Γ^UB = γ‖E‖₁,₁²`, so `y = √(β/γ)`; a looser bound by a factor `M` in `β`.
    Unnormalized,
}

impl BoundScaling {
    pub fn envelope_threshold(&self, beta: f64, gamma: f64, m: usize) -> f64 {
        match self {
            BoundScaling::PerAntenna => (beta * m as f64 / gamma).sqrt(),
            BoundScaling::Unnormalized => (beta / gamma).sqrt(),
        }
    }
}

fn check_thresholds(betas: &[f64]) -> Result<()> {
    if betas.iter().any(|b| !(*b > 0.0 && b.is_finite())) {
        return Err(Error::Domain("thresholds must be positive and finite".into()));
    }
    if betas.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::Domain("thresholds must be ascending".into()));
    }
    Ok(())
}

/// `P[Γ^UB <= β]` at each `β`, a lower bound on the outage probability
/// without a direct link.
pub fn outage_lower_bound(
    ev: &MgfEvaluator,
    gamma: f64,
    betas: &[f64],
    scaling: BoundScaling,
    settings: &EulerSettings,
) -> Result<OutageCurve> {
    check_thresholds(betas)?;
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::Domain(format!("gamma must be positive, got {gamma}")));
    }
    let values: Vec<f64> = betas
        .par_iter()
        .map(|&b| {
            let y = scaling.envelope_threshold(b, gamma, ev.antennas());
            Ok(invert_mgf_to_cdf(ev, y, settings)?.value)
        })
        .collect::<Result<_>>()?;
    let mut probabilities = Vec::with_capacity(values.len());
    let mut running = 0.0f64;
    for v in values {
        running = running.max(v);
        probabilities.push(running);
    }
    Ok(OutageCurve {
        kind: CurveKind::AnalyticalLowerBound,
        thresholds: betas.to_vec(),
        ci_low: probabilities.clone(),
        ci_high: probabilities.clone(),
        probabilities,
        trials: None,
    })
}

/// Empirical `P[Γ < β]` from SNR samples with Wilson 95% intervals.
pub fn outage_from_samples(snrs: &[f64], betas: &[f64], kind: CurveKind) -> Result<OutageCurve> {
    check_thresholds(betas)?;
    let mut sorted = snrs.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let mut curve = OutageCurve {
        kind,
        thresholds: betas.to_vec(),
        probabilities: Vec::with_capacity(betas.len()),
        ci_low: Vec::with_capacity(betas.len()),
        ci_high: Vec::with_capacity(betas.len()),
        trials: Some(n),
    };
    for &b in betas {
        let below = sorted.partition_point(|&x| x < b);
        let (lo, hi) = wilson_interval(below, n, Z95);
        curve.probabilities.push(if n == 0 { 0.0 } else { below as f64 / n as f64 });
        curve.ci_low.push(lo);
        curve.ci_high.push(hi);
    }
    Ok(curve)
}
