//! Special functions for the Rician envelope: modified Bessel I₀, the
//! first-order Marcum Q function and the Rician density / distribution.
//!
//! Marcum Q₁ uses two regimes. For small `a·b` it is evaluated as the
//! Poisson-mixture (noncentral chi-square) series, which has only positive
//! terms on both tails. Above the crossover it integrates the Rician density
//! written with the exponentially scaled Bessel function, which never
//! overflows and keeps relative accuracy in the far tails.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{self, Tolerance};

const SERIES_LIMIT: f64 = 30.0;
const ASYMPTOTIC_FROM: f64 = 30.0;

/// Modified Bessel function of the first kind, order zero. Even in `x`.
pub fn bessel_i0(x: f64) -> f64 {
    let x = x.abs();
    if x <= ASYMPTOTIC_FROM {
        i0_power_series(x)
    } else {
        bessel_i0e(x) * x.exp()
    }
}

/// `e^{-|x|} I₀(x)`, finite for every finite `x`.
pub fn bessel_i0e(x: f64) -> f64 {
    let x = x.abs();
    if x <= ASYMPTOTIC_FROM {
        i0_power_series(x) * (-x).exp()
    } else {
        // Hankel expansion; terms shrink until k ≈ 2x, far past where we stop.
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 1..200 {
            let kf = k as f64;
            let next = term * (2.0 * kf - 1.0).powi(2) / (8.0 * kf * x);
            if next > term {
                break;
            }
            term = next;
            sum += term;
            if term < 1e-17 * sum {
                break;
            }
        }
        sum / (2.0 * PI * x).sqrt()
    }
}

fn i0_power_series(x: f64) -> f64 {
    let q = 0.25 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut k = 1.0;
    while term > 1e-17 * sum {
        term *= q / (k * k);
        sum += term;
        k += 1.0;
    }
    sum
}

/// First-order Marcum Q function, `Q₁(a, b) = P[R > b]` for a Rician `R`
/// with noncentrality `a` and unit per-component deviation.
pub fn marcum_q1(a: f64, b: f64) -> f64 {
    marcum_pair(a, b).0
}

/// Complement `P₁(a, b) = 1 − Q₁(a, b)`, evaluated directly on whichever side
/// is small so that lower-tail probabilities keep relative accuracy.
pub fn marcum_p1(a: f64, b: f64) -> f64 {
    marcum_pair(a, b).1
}

fn marcum_pair(a: f64, b: f64) -> (f64, f64) {
    if a.is_nan() || b.is_nan() {
        return (f64::NAN, f64::NAN);
    }
    let a = a.max(0.0);
    let b = b.max(0.0);
    if b == 0.0 {
        return (1.0, 0.0);
    }
    if b.is_infinite() {
        return (0.0, 1.0);
    }
    if a == 0.0 {
        let half = 0.5 * b * b;
        return ((-half).exp(), -(-half).exp_m1());
    }
    let upper_side = b >= a;
    if in_series_regime(a, b) {
        if upper_side {
            let q = q1_series(a, b);
            (q, 1.0 - q)
        } else {
            let p = p1_series(a, b);
            (1.0 - p, p)
        }
    } else if upper_side {
        let q = rice_mass(a, b, b.max(a) + 40.0);
        (q, 1.0 - q)
    } else {
        let p = rice_mass(a, (a - 40.0).max(0.0), b);
        (1.0 - p, p)
    }
}

fn in_series_regime(a: f64, b: f64) -> bool {
    a * b < SERIES_LIMIT && 0.5 * a * a < 600.0 && 0.5 * b * b < 600.0
}

/// Poisson probabilities `e^{-m} m^j / j!` for `j = 0..` until the tail past
/// the mode is negligible.
fn poisson_pmf(mean: f64) -> Vec<f64> {
    let stop = (mean + 40.0 * mean.sqrt() + 60.0).ceil() as usize;
    let mut pmf = Vec::with_capacity(stop + 1);
    let mut p = (-mean).exp();
    pmf.push(p);
    for j in 1..=stop {
        p *= mean / j as f64;
        pmf.push(p);
        if j as f64 > mean && p < 1e-300 {
            break;
        }
    }
    pmf
}

/// `Q₁ = P[J ≤ K]`, `J ~ Poisson(b²/2)`, `K ~ Poisson(a²/2)`.
fn q1_series(a: f64, b: f64) -> f64 {
    let outer = poisson_pmf(0.5 * a * a);
    let inner = poisson_pmf(0.5 * b * b);
    let mut cdf = 0.0;
    let mut total = 0.0;
    for (k, pk) in outer.iter().enumerate() {
        if let Some(d) = inner.get(k) {
            cdf += d;
        }
        total += pk * cdf;
    }
    total
}

/// `P₁ = P[J > K]`, the same mixture summed over the upper tail of `J`.
fn p1_series(a: f64, b: f64) -> f64 {
    let outer = poisson_pmf(0.5 * a * a);
    let inner = poisson_pmf(0.5 * b * b);
    // suffix[k] = P[J > k]
    let mut suffix = vec![0.0; inner.len() + 1];
    for j in (0..inner.len()).rev() {
        suffix[j] = suffix[j + 1] + inner[j];
    }
    outer
        .iter()
        .enumerate()
        .map(|(k, pk)| pk * suffix.get(k + 1).copied().unwrap_or(0.0))
        .sum()
}

/// Rician(a, 1) probability mass on [lo, hi].
fn rice_mass(a: f64, lo: f64, hi: f64) -> f64 {
    if hi <= lo {
        return 0.0;
    }
    let density = |x: f64| x * (-0.5 * (x - a) * (x - a)).exp() * bessel_i0e(a * x);
    let tol = Tolerance { abs: 1e-300, rel: 1e-14, max_segments: 4000 };
    match quadrature::integrate(density, lo, hi, tol) {
        Ok(est) => est.value,
        Err(_) => {
            // Fall back to a fine fixed rule; the density is smooth so this is
            // accurate to well below the requested tolerance in practice.
            quadrature::FixedRule::composite(lo, hi, 400, 20).integrate(density)
        }
    }
}

/// Rician envelope `|ν + σ(X + jY)|` with `X, Y ~ N(0, 1)` independent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RicianParams {
    /// Noncentrality (LoS amplitude).
    pub nu: f64,
    /// Per-component Gaussian standard deviation.
    pub sigma: f64,
}

impl RicianParams {
    pub fn new(nu: f64, sigma: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::Domain(format!("Rician sigma must be positive and finite, got {sigma}")));
        }
        if !(nu >= 0.0 && nu.is_finite()) {
            return Err(Error::Domain(format!("Rician nu must be non-negative and finite, got {nu}")));
        }
        Ok(Self { nu, sigma })
    }

    /// Envelope of `κ_l·e^{jθ} + κ_n·CN(0, 1)` for Rician factor `k`.
    /// `None` when `k` is infinite (the envelope is the constant 1).
    pub fn from_rician_factor(k: f64) -> Option<Self> {
        if k.is_infinite() {
            return None;
        }
        let (los, nlos) = crate::config::kappa(k);
        Some(Self { nu: los, sigma: nlos / 2f64.sqrt() })
    }

    pub fn pdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        let s2 = self.sigma * self.sigma;
        let d = x - self.nu;
        x / s2 * (-0.5 * d * d / s2).exp() * bessel_i0e(x * self.nu / s2)
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        marcum_p1(self.nu / self.sigma, x / self.sigma)
    }

    /// Survival function `P[R > x]`.
    pub fn sf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 1.0;
        }
        marcum_q1(self.nu / self.sigma, x / self.sigma)
    }

    /// Point past which the survival function is below ~1e-18.
    pub fn support_end(&self) -> f64 {
        self.nu + 10.0 * self.sigma
    }

    pub fn mean(&self) -> f64 {
        let end = self.support_end();
        quadrature::FixedRule::composite(0.0, end, 32, 20).integrate(|x| self.sf(x))
    }
}

pub fn rician_pdf(x: f64, p: &RicianParams) -> f64 {
    p.pdf(x)
}

pub fn rician_cdf(x: f64, p: &RicianParams) -> f64 {
    p.cdf(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// I₀ from its integral form, (1/π)∫₀^π e^{x cos t} dt, via the
    /// trapezoid rule (spectrally accurate for periodic integrands). Scaled by
    /// e^{-x}.
    fn i0e_integral(x: f64) -> f64 {
        let n = 4000;
        let h = PI / n as f64;
        let mut s = 0.5 * ((x * 1.0 - x).exp() + (-x - x).exp());
        for k in 1..n {
            s += (x * (k as f64 * h).cos() - x).exp();
        }
        s * h / PI
    }

    /// Σ_k (a/b)^k I_k(ab) e^{-(a²+b²)/2} with I_k from its power series.
    fn marcum_bessel_series(a: f64, b: f64) -> f64 {
        let z = a * b;
        let bessel_k = |k: usize| -> f64 {
            let mut term = (0.5 * z).powi(k as i32) / (1..=k).map(|j| j as f64).product::<f64>();
            let mut sum = term;
            let mut m = 1.0;
            while term > 1e-18 * sum {
                term *= 0.25 * z * z / (m * (m + k as f64));
                sum += term;
                m += 1.0;
            }
            sum
        };
        let mut total = 0.0;
        for k in 0..400 {
            let t = (a / b).powi(k as i32) * bessel_k(k);
            total += t;
            if t < 1e-14 * total && k > 5 {
                break;
            }
        }
        total * (-0.5 * (a * a + b * b)).exp()
    }

    #[test]
    fn i0_reference_values() {
        assert_eq!(bessel_i0(0.0), 1.0);
        // 50-term power series computed independently
        let mut s = 0.0;
        let mut t = 1.0;
        for k in 0..50 {
            if k > 0 {
                t *= 0.25 / (k as f64 * k as f64);
            }
            s += t;
        }
        assert!((bessel_i0(1.0) - s).abs() < 1e-15 * s);
        assert!((bessel_i0(1.0) - 1.266_065_877_752_008_4).abs() < 1e-15);
        assert_eq!(bessel_i0(-2.5), bessel_i0(2.5));
    }

    #[test]
    fn i0e_matches_integral_representation_across_regimes() {
        for &x in &[0.1, 1.0, 5.0, 12.0, 29.9, 30.0, 30.1, 45.0, 100.0, 400.0] {
            let want = i0e_integral(x);
            let got = bessel_i0e(x);
            assert!(((got - want) / want).abs() < 1e-12, "x={x}: {got} vs {want}");
        }
    }

    #[test]
    fn i0e_large_argument_limit() {
        let x = 700.0;
        let ratio = bessel_i0e(x) * (2.0 * PI * x).sqrt();
        assert!((ratio - 1.0).abs() < 1e-3);
    }

    #[test]
    fn marcum_boundary_identities() {
        for &a in &[0.0, 0.3, 2.0, 9.0] {
            assert_eq!(marcum_q1(a, 0.0), 1.0);
        }
        for &b in &[0.1, 1.0, 3.0, 7.0] {
            let got = marcum_q1(0.0, b);
            assert!((got - (-0.5 * b * b).exp()).abs() < 1e-16);
        }
    }

    #[test]
    fn marcum_matches_bessel_series_oracle() {
        let cases = [(1.0, 2.0), (0.5, 0.5), (2.0, 1.0), (3.0, 4.0), (1.5, 6.0), (4.0, 7.4), (5.0, 5.9)];
        for &(a, b) in &cases {
            let want = marcum_bessel_series(a, b);
            let got = marcum_q1(a, b);
            assert!(((got - want) / want).abs() < 1e-10, "Q1({a},{b}) = {got} vs {want}");
        }
    }

    #[test]
    fn regimes_agree_at_crossover() {
        // a·b straddling the series limit, both sides of b = a
        for &(a, b) in &[(5.0, 5.99), (5.0, 6.01), (6.01, 5.0), (5.99, 5.0), (3.0, 9.99), (3.0, 10.01)] {
            let oracle = marcum_bessel_series(a, b);
            let q = marcum_q1(a, b);
            assert!(((q - oracle) / oracle).abs() < 1e-10, "({a},{b}): {q} vs {oracle}");
            let p_direct = rice_mass(a, 0.0, b);
            assert!((marcum_p1(a, b) - p_direct).abs() < 1e-12);
        }
    }

    #[test]
    fn complement_series_are_independent_and_sum_to_one() {
        for &(a, b) in &[(0.2, 0.1), (1.0, 2.0), (2.0, 1.0), (4.0, 3.0), (3.0, 8.0)] {
            let q = q1_series(a, b);
            let p = p1_series(a, b);
            assert!((q + p - 1.0).abs() < 1e-13, "({a},{b}): {q} + {p}");
        }
    }

    #[test]
    fn lower_tail_keeps_relative_accuracy() {
        // P₁(a, b) for b ≪ a is tiny; compare to direct integration of the density.
        let (a, b) = (8.0, 1.0);
        let want = rice_mass(a, 0.0, b);
        let got = marcum_p1(a, b);
        assert!(want > 0.0 && want < 1e-10);
        assert!(((got - want) / want).abs() < 1e-9);
    }

    #[test]
    fn rician_rayleigh_special_case() {
        let p = RicianParams::new(0.0, 0.8).unwrap();
        for &x in &[0.1f64, 0.5, 1.0, 2.5] {
            let want = 1.0 - (-x * x / (2.0 * 0.64)).exp();
            assert!((p.cdf(x) - want).abs() < 1e-14);
        }
    }

    #[test]
    fn rician_step_in_los_limit() {
        let p = RicianParams::new(1.0, 1e-6).unwrap();
        assert!(p.cdf(0.999) < 1e-12);
        assert!(p.cdf(1.001) > 1.0 - 1e-12);
        assert!((p.cdf(1.0) - 0.5).abs() < 1e-3);
    }

    #[test]
    fn rician_pdf_is_derivative_of_cdf() {
        for k in [0.0, 1.0, 5.0, 50.0] {
            let p = RicianParams::from_rician_factor(k).unwrap();
            let mut x = 1e-3;
            while x < p.support_end() {
                let h = 1e-5 * x.max(1e-2);
                let fd = (p.cdf(x + h) - p.cdf(x - h)) / (2.0 * h);
                assert!((fd - p.pdf(x)).abs() < 1e-6, "K={k} x={x}: {fd} vs {}", p.pdf(x));
                x *= 1.3;
            }
        }
    }

    #[test]
    fn rician_pdf_normalized() {
        for k in [0.0, 2.0, 10.0, 100.0] {
            let p = RicianParams::from_rician_factor(k).unwrap();
            let mass = quadrature::integrate(|x| p.pdf(x), 0.0, p.support_end(), Tolerance::default())
                .unwrap()
                .value;
            assert!((mass - 1.0).abs() < 1e-8, "K={k}: {mass}");
            assert_eq!(p.cdf(0.0), 0.0);
            assert!((p.cdf(1e3) - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn rejects_nonpositive_sigma() {
        assert!(RicianParams::new(1.0, 0.0).is_err());
        assert!(RicianParams::new(1.0, -1.0).is_err());
        assert!(RicianParams::new(-1.0, 1.0).is_err());
    }

    mod props {
        use super::super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn q1_in_unit_interval_and_monotone(a in 0.0f64..15.0, b in 0.0f64..20.0, db in 0.0f64..2.0, da in 0.0f64..2.0) {
                let q = marcum_q1(a, b);
                prop_assert!((0.0..=1.0).contains(&q));
                prop_assert!(marcum_q1(a, b + db) <= q + 1e-14);
                prop_assert!(marcum_q1(a + da, b) >= q - 1e-14);
            }

            #[test]
            fn q_and_p_complement(a in 0.0f64..15.0, b in 0.0f64..20.0) {
                prop_assert!((marcum_q1(a, b) + marcum_p1(a, b) - 1.0).abs() < 1e-12);
            }
        }
    }
}
