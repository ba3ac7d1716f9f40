//! Closed-form SNR / capacity upper bound `(γ/M)‖G‖²₁,₁`.
//!
//! For any constant-modulus beamformer the triangle inequality gives
//! `‖G f‖₁ ≤ ‖G‖₁,₁ / √M`, so the bound holds per realization for the analog
//! design. It is attained when `G` has unit rank.

use serde::{Deserialize, Serialize};

use crate::beamforming::BeamformingResult;
use crate::channel::ChannelRealization;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Exactness {
    Generic,
    /// Cascaded channel has unit rank but the direct link adds a second direction.
    LosTight,
    /// `G` has unit rank: the bound is achieved.
    UnitRankExact,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundReport {
    pub snr_ub: f64,
    pub capacity_ub: f64,
    pub exactness: Exactness,
}

/// `‖A‖₁,₁`, the sum of entry magnitudes.
pub fn l11_norm(a: ndarray::ArrayView2<num_complex::Complex64>) -> f64 {
    a.iter().map(|x| x.norm()).sum()
}

pub fn snr_upper_bound(ch: &ChannelRealization, gamma: f64) -> f64 {
    let l11 = l11_norm(ch.stacked.view());
    gamma / ch.antennas() as f64 * l11 * l11
}

/// `log₂(1 + snr)` in bits/s/Hz.
pub fn capacity(snr: f64) -> Result<f64> {
    if snr.is_nan() || snr < 0.0 {
        return Err(Error::Domain(format!("SNR must be non-negative, got {snr}")));
    }
    Ok(snr.ln_1p() / std::f64::consts::LN_2)
}

/// Bound minus achieved SNR.
pub fn bound_gap(ch: &ChannelRealization, gamma: f64, result: &BeamformingResult) -> f64 {
    snr_upper_bound(ch, gamma) - result.snr
}

/// True when every pair of nonzero rows is parallel to relative `tol`.
fn unit_rank(rows: ndarray::ArrayView2<num_complex::Complex64>, tol: f64) -> bool {
    let nonzero: Vec<_> = rows
        .rows()
        .into_iter()
        .filter(|r| r.iter().any(|x| x.norm() > 0.0))
        .collect();
    let Some(first) = nonzero.first() else {
        return true;
    };
    let n0: f64 = first.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    nonzero.iter().skip(1).all(|r| {
        let nr: f64 = r.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        let inner: num_complex::Complex64 = first.iter().zip(r.iter()).map(|(a, b)| a.conj() * b).sum();
        (inner.norm() - n0 * nr).abs() <= tol * n0 * nr
    })
}

pub fn bound_report(ch: &ChannelRealization, gamma: f64) -> BoundReport {
    let snr_ub = snr_upper_bound(ch, gamma);
    let exactness = if unit_rank(ch.stacked.view(), 1e-9) {
        Exactness::UnitRankExact
    } else if unit_rank(ch.cascaded.view(), 1e-9) {
        Exactness::LosTight
    } else {
        Exactness::Generic
    };
    BoundReport { snr_ub, capacity_ub: capacity(snr_ub).expect("bound is non-negative"), exactness }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::beamforming::{analog_beamformer, digital_beamformer, IterationSettings};
    use crate::channel::{draw_channel, los_channel, trial_rng};
    use crate::config::SystemConfig;
    use ndarray::{Array1, Array2};
    use num_complex::Complex64;

    #[test]
    fn capacity_values() {
        assert_eq!(capacity(0.0).unwrap(), 0.0);
        assert!((capacity(1.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((capacity(16384.0).unwrap() - 16385f64.log2()).abs() < 1e-12);
        assert!((capacity(16384.0).unwrap() - 14.000_088).abs() < 1e-6);
        assert!(capacity(-1.0).is_err());
    }

    #[test]
    fn los_bounds_match_closed_forms() {
        let cfg = SystemConfig { m: 4, n: 64, ..SystemConfig::default() };
        let mu = cfg.mu();
        let ch = los_channel(&cfg);
        let want = 4.0 * (64.0 + mu).powi(2);
        assert!((snr_upper_bound(&ch, 1.0) - want).abs() < 1e-9 * want);

        let cfg = SystemConfig { direct_link: false, ..cfg };
        let ch = los_channel(&cfg);
        assert!((snr_upper_bound(&ch, 1.0) - 4.0 * 64.0 * 64.0).abs() < 1e-8);
        assert_eq!(bound_report(&ch, 1.0).exactness, Exactness::UnitRankExact);

        let zero = ChannelRealization::from_cascaded(Array2::zeros((3, 2)), Array1::zeros(2), 0.0).unwrap();
        assert_eq!(snr_upper_bound(&zero, 1.0), 0.0);
    }

    #[test]
    fn exactness_flags() {
        let cfg = SystemConfig { m: 4, n: 8, ..SystemConfig::default() };
        assert_eq!(bound_report(&los_channel(&cfg), 1.0).exactness, Exactness::LosTight);
        let aligned = SystemConfig { theta_bd_d: cfg.theta_bd_i, ..cfg.clone() };
        assert_eq!(bound_report(&los_channel(&aligned), 1.0).exactness, Exactness::UnitRankExact);
        let ch = draw_channel(&SystemConfig { k1: 1.0, k2: 1.0, ..cfg }, &mut trial_rng(0, 0));
        assert_eq!(bound_report(&ch, 1.0).exactness, Exactness::Generic);
    }

    #[test]
    fn analog_never_exceeds_bound() {
        for seed in 0..200 {
            let mut cfg = SystemConfig { m: 4, n: 16, direct_link: seed % 2 == 0, ..SystemConfig::default() };
            cfg.set_rician_factor([0.0, 1.0, 10.0][seed as usize % 3]);
            let ch = draw_channel(&cfg, &mut trial_rng(seed, 0));
            let fa = analog_beamformer(&ch, 1.0, &IterationSettings::default());
            assert!(bound_gap(&ch, 1.0, &fa) >= -1e-9 * fa.snr);
        }
    }

    #[test]
    fn unit_rank_gap_vanishes_for_both_architectures() {
        let mut cfg = SystemConfig { m: 3, n: 20, direct_link: false, ..SystemConfig::default() };
        cfg.set_rician_factor(f64::INFINITY);
        let ch = los_channel(&cfg);
        for r in [
            digital_beamformer(&ch, 1.0, &IterationSettings::default()),
            analog_beamformer(&ch, 1.0, &IterationSettings::default()),
        ] {
            assert!(bound_gap(&ch, 1.0, &r).abs() <= 1e-6 * r.snr);
        }
    }

    #[test]
    fn bound_grows_with_appended_rows() {
        let cfg = SystemConfig { m: 3, n: 12, direct_link: false, k1: 1.0, k2: 1.0, ..SystemConfig::default() };
        let ch = draw_channel(&cfg, &mut trial_rng(1, 1));
        let mut prev = 0.0;
        for rows in 1..=12 {
            let sub = ch.cascaded.slice(ndarray::s![..rows, ..]).to_owned();
            let part = ChannelRealization::from_cascaded(sub, Array1::from_elem(3, Complex64::new(0.0, 0.0)), 0.0).unwrap();
            let ub = snr_upper_bound(&part, 1.0);
            assert!(ub >= prev);
            prev = ub;
        }
    }
}
