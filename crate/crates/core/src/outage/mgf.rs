//! Moment generating function of the cascaded envelope `Y = ‖E‖₁,₁`.
//!
//! `Y = Σₙ |hₙ| Xₙ` with `Xₙ = Σₘ |Hₙₘ|`, all envelopes independent. For an
//! envelope `R` with survival function `S`, integration by parts gives
//! `E[e^{-zR}] = z·L{F_R}(z) = 1 − z ∫₀^∞ e^{-zx} S(x) dx`, which is the
//! route taken here (Marcum-Q survival, Laplace transform of the CDF).
//! Conditioning on `|hₙ| = h` scales `|Hₙₘ|` by `h`, so
//!
//! `E[e^{-sY}] = ( ∫ f_|h|(h) · E[e^{-s h |H|}]^M dh )^N`.

use std::sync::OnceLock;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::quadrature::{self, FixedRule, Tolerance};
use crate::specfun::RicianParams;

/// Distribution of one channel-entry envelope.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Envelope {
    Rician(RicianParams),
    /// Point mass (the pure-LoS limit).
    Constant(f64),
}

impl Envelope {
    /// Envelope of a unit-power Rician entry with factor `k` (`inf` allowed).
    pub fn from_rician_factor(k: f64) -> Self {
        match RicianParams::from_rician_factor(k) {
            Some(p) => Envelope::Rician(p),
            None => Envelope::Constant(1.0),
        }
    }

    /// Interval outside of which the density is negligible.
    fn support(&self) -> (f64, f64) {
        match *self {
            Envelope::Rician(p) => ((p.nu - 10.0 * p.sigma).max(0.0), p.support_end()),
            Envelope::Constant(c) => (c, c),
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            Envelope::Rician(p) => p.mean(),
            Envelope::Constant(c) => c,
        }
    }
}

/// Laplace transform of the CDF of `scale·R`, `∫₀^∞ e^{-sx} F_R(x/scale) dx`,
/// by adaptive quadrature of the Marcum-Q survival function.
pub fn laplace_of_rician_cdf(s: Complex64, scale: f64, p: &RicianParams) -> Result<Complex64> {
    if !(s.re > 0.0) {
        return Err(Error::Domain(format!("Laplace variable needs Re(s) > 0, got {s}")));
    }
    if !(scale >= 0.0 && scale.is_finite()) {
        return Err(Error::Domain(format!("scale must be non-negative, got {scale}")));
    }
    if scale < 1e-8 {
        // F(x/scale) is a step at 0 to first order: L ≈ (1 − s·scale·E[R]) / s
        return Ok((Complex64::new(1.0, 0.0) - s * scale * p.mean()) / s);
    }
    let z = s * scale;
    let lo = (p.nu - 10.0 * p.sigma).max(0.0);
    let hi = p.support_end();
    let tol = Tolerance { abs: 1e-15, rel: 1e-12, max_segments: 4000 };
    let tail = quadrature::integrate(|x| (-z * x).exp() * p.sf(x), lo, hi, tol)?;
    Ok(((-z * lo).exp() / z - tail.value) * scale)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MgfSettings {
    /// Panels of the coarsest rule over the `|h|` support.
    pub outer_panels: usize,
    pub outer_order: usize,
    /// Panels of the coarsest rule over the `|H|` support.
    pub inner_panels: usize,
    pub inner_order: usize,
    /// Each finer level doubles the panel count; at most this many doublings.
    pub max_level: usize,
    /// Upper bound on the phase swept per inner panel before refining.
    pub inner_phase: f64,
    /// Upper bound on the phase swept per outer panel before refining.
    pub outer_phase: f64,
    /// Integration stops where `e^{-Re(z)x}` has decayed by `e^{-decay_cutoff}`.
    pub decay_cutoff: f64,
}

impl Default for MgfSettings {
    fn default() -> Self {
        Self {
            outer_panels: 8,
            outer_order: 25,
            inner_panels: 8,
            inner_order: 16,
            max_level: 12,
            inner_phase: 8.0,
            outer_phase: 12.0,
            decay_cutoff: 40.0,
        }
    }
}

/// Precomputed rule with the weight function folded into the weights.
#[derive(Debug)]
struct WeightedRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

/// `E[e^{-sY}]` for `Y = ‖E‖₁,₁`, the envelope sum of an N×M cascaded channel.
#[derive(Debug)]
pub struct MgfEvaluator {
    m: usize,
    n: usize,
    ris_user: Envelope,
    bs_ris: Envelope,
    settings: MgfSettings,
    entry_mean: f64,
    inner: Vec<OnceLock<WeightedRule>>,
    outer: Vec<OnceLock<WeightedRule>>,
}

impl MgfEvaluator {
    pub fn new(m: usize, n: usize, ris_user: Envelope, bs_ris: Envelope, settings: MgfSettings) -> Result<Self> {
        if m == 0 || n == 0 {
            return Err(Error::Config(format!("need M, N >= 1 (got M={m}, N={n})")));
        }
        let levels = settings.max_level + 1;
        Ok(Self {
            m,
            n,
            ris_user,
            bs_ris,
            settings,
            entry_mean: bs_ris.mean(),
            inner: (0..levels).map(|_| OnceLock::new()).collect(),
            outer: (0..levels).map(|_| OnceLock::new()).collect(),
        })
    }

    /// Evaluator for the cascaded channel of `cfg`: `|h|` from `k2`, `|H|` from `k1`.
    pub fn from_config(cfg: &SystemConfig, settings: MgfSettings) -> Result<Self> {
        Self::new(
            cfg.m,
            cfg.n,
            Envelope::from_rician_factor(cfg.k2),
            Envelope::from_rician_factor(cfg.k1),
            settings,
        )
    }

    pub fn antennas(&self) -> usize {
        self.m
    }

    pub fn elements(&self) -> usize {
        self.n
    }

    pub fn settings(&self) -> &MgfSettings {
        &self.settings
    }

    /// `Some(y)` when `Y` is the constant `y`.
    pub fn deterministic_value(&self) -> Option<f64> {
        match (self.ris_user, self.bs_ris) {
            (Envelope::Constant(a), Envelope::Constant(b)) => Some(a * b * (self.m * self.n) as f64),
            _ => None,
        }
    }

    pub fn mean(&self) -> f64 {
        self.ris_user.mean() * self.bs_ris.mean() * (self.m * self.n) as f64
    }

    /// Cheap upper bound on `P[Y <= y]` from `P[Σₘ|Hₘ| <= b] <= F_|H|(b)^M`.
    pub fn lower_tail_bound(&self, y: f64) -> Result<f64> {
        if !(y >= 0.0) {
            return Err(Error::Domain(format!("threshold must be non-negative, got {y}")));
        }
        let m = self.m as i32;
        let entry_cdf = |b: f64| match self.bs_ris {
            Envelope::Constant(c) => {
                if c * self.m as f64 <= b {
                    1.0
                } else {
                    0.0
                }
            }
            Envelope::Rician(q) => q.cdf(b).powi(m),
        };
        let row = match self.ris_user {
            Envelope::Constant(a) if a == 0.0 => 1.0,
            Envelope::Constant(a) => entry_cdf(y / a),
            Envelope::Rician(p) => {
                let (lo, hi) = self.ris_user.support();
                let inside = quadrature::integrate(
                    |h| if h == 0.0 { p.pdf(h) } else { p.pdf(h) * entry_cdf(y / h) },
                    lo,
                    hi,
                    Tolerance { abs: 1e-16, rel: 1e-8, max_segments: 500 },
                )?;
                inside.value + inside.error + p.cdf(lo) + p.sf(hi)
            }
        };
        Ok(row.min(1.0).powi(self.n as i32))
    }

    fn level_for(&self, rate: f64, base_panels: usize, span: f64, phase: f64) -> Option<usize> {
        (0..=self.settings.max_level).find(|&l| rate * span / (base_panels << l) as f64 <= phase)
    }

    fn inner_rule(&self, p: &RicianParams, level: usize) -> &WeightedRule {
        self.inner[level].get_or_init(|| {
            let (lo, hi) = Envelope::Rician(*p).support();
            let rule = FixedRule::composite(lo, hi, self.settings.inner_panels << level, self.settings.inner_order);
            let weights = rule.nodes.iter().zip(&rule.weights).map(|(&x, &w)| w * p.sf(x)).collect();
            WeightedRule { nodes: rule.nodes, weights }
        })
    }

    fn outer_rule(&self, p: &RicianParams, level: usize) -> &WeightedRule {
        self.outer[level].get_or_init(|| {
            let (lo, hi) = Envelope::Rician(*p).support();
            let rule = FixedRule::composite(lo, hi, self.settings.outer_panels << level, self.settings.outer_order);
            let weights = rule.nodes.iter().zip(&rule.weights).map(|(&x, &w)| w * p.pdf(x)).collect();
            WeightedRule { nodes: rule.nodes, weights }
        })
    }

    /// `E[e^{-z|H|}]` for one BS–RIS entry.
    fn entry_transform(&self, z: Complex64) -> Result<Complex64> {
        match self.bs_ris {
            Envelope::Constant(c) => Ok((-z * c).exp()),
            Envelope::Rician(p) => {
                if z == Complex64::new(0.0, 0.0) {
                    return Ok(Complex64::new(1.0, 0.0));
                }
                let (lo, hi) = self.bs_ris.support();
                let end = if z.re > 0.0 { hi.min(lo + self.settings.decay_cutoff / z.re) } else { hi };
                let level = self.level_for(z.norm(), self.settings.inner_panels, hi - lo, self.settings.inner_phase);
                let integral = match level {
                    Some(level) => {
                        // Panels share node offsets, so e^{-zx} factors into a
                        // per-panel shift times 16 fixed offsets.
                        let rule = self.inner_rule(&p, level);
                        let order = self.settings.inner_order;
                        let panels = self.settings.inner_panels << level;
                        let width = (hi - lo) / panels as f64;
                        let offsets: Vec<Complex64> = rule.nodes[..order].iter().map(|&x| (-z * (x - lo)).exp()).collect();
                        let step = (-z * width).exp();
                        let mut shift = Complex64::new(1.0, 0.0);
                        let mut sum = Complex64::new(0.0, 0.0);
                        for (k, w) in rule.weights.chunks_exact(order).enumerate() {
                            if lo + k as f64 * width > end {
                                break;
                            }
                            let panel = w.iter().zip(&offsets).fold(Complex64::new(0.0, 0.0), |acc, (&w, &e)| acc + e * w);
                            sum += shift * panel;
                            shift *= step;
                        }
                        sum * (-z * lo).exp()
                    }
                    None => {
                        let tol = Tolerance { abs: 1e-15, rel: 1e-12, max_segments: 20_000 };
                        quadrature::integrate(|x| (-z * x).exp() * p.sf(x), lo, end, tol)?.value
                    }
                };
                Ok((-z * lo).exp() - z * integral)
            }
        }
    }

    /// `E[e^{-s Yₙ}]` for one row `Yₙ = |hₙ| Σₘ |Hₙₘ|`.
    fn row_transform(&self, s: Complex64) -> Result<Complex64> {
        let m = self.m as i32;
        match self.ris_user {
            Envelope::Constant(c) => Ok(self.entry_transform(s * c)?.powi(m)),
            Envelope::Rician(p) => {
                let (lo, hi) = self.ris_user.support();
                let rate = s.norm() * self.m as f64 * self.entry_mean;
                let level = self
                    .level_for(rate, self.settings.outer_panels, hi - lo, self.settings.outer_phase)
                    .ok_or(Error::Quadrature { achieved: f64::INFINITY, requested: 0.0 })?;
                let rule = self.outer_rule(&p, level);
                let order = self.settings.outer_order;
                // |E[e^{-shH}]| <= E[e^{-Re(s)hH}], which decreases in h.
                let negligible = (-self.settings.decay_cutoff).exp();
                let mut acc = Complex64::new(0.0, 0.0);
                for (i, (&h, &w)) in rule.nodes.iter().zip(&rule.weights).enumerate() {
                    if s.re > 0.0 && i % order == 0 && i > 0 {
                        let envelope = self.entry_transform(Complex64::new(s.re * h, 0.0))?.re.powi(m);
                        if envelope < negligible {
                            break;
                        }
                    }
                    acc += self.entry_transform(s * h)?.powi(m) * w;
                }
                Ok(acc)
            }
        }
    }

    /// `M(-s) = E[e^{-sY}]`, defined for `Re(s) >= 0`.
    pub fn evaluate(&self, s: Complex64) -> Result<Complex64> {
        if s.re < 0.0 || !s.re.is_finite() || !s.im.is_finite() {
            return Err(Error::Domain(format!("MGF evaluated at -s needs Re(s) >= 0, got {s}")));
        }
        if s == Complex64::new(0.0, 0.0) {
            return Ok(Complex64::new(1.0, 0.0));
        }
        Ok(self.row_transform(s)?.powi(self.n as i32))
    }

    /// Laplace transform of the CDF of `Y`: `M(-s)/s`.
    pub fn cdf_transform(&self, s: Complex64) -> Result<Complex64> {
        Ok(self.evaluate(s)? / s)
    }
}

/// `M(-s)` for an explicit `s` grid, as `(s, value)` rows.
pub fn probe(ev: &MgfEvaluator, grid: &[Complex64]) -> Result<Vec<(Complex64, Complex64)>> {
    grid.iter().map(|&s| Ok((s, ev.evaluate(s)?))).collect()
}
