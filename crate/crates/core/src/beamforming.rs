//! Joint transmit beamformer / RIS phase optimization.
//!
//! With the RIS co-phased for a given beamformer `f`, the SNR becomes
//! `γ‖G f‖₁²`. The fully digital (FD) design maximizes `‖G f‖₁` over the unit
//! sphere by alternating `f = Gᴴu / ‖Gᴴu‖` with the unimodular `u` that
//! attains `‖G f‖₁ = max_u Re{uᴴ G f}`. The fully analog (FA) design
//! alternates the closed-form RIS phases with the per-antenna phase-matched
//! beamformer. Both are coordinate ascent, so the objective never decreases.

use ndarray::{Array1, ArrayView1, ArrayView2};
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{trial_rng, ChannelRealization};
use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Architecture {
    /// Fully digital: `‖f‖₂ = 1`.
    Fd,
    /// Fully analog: `|f_m| = 1/√M`.
    Fa,
    /// Matched-filter baseline (one alternation from the dominant singular direction).
    Mrt,
}

impl Architecture {
    pub fn as_str(&self) -> &'static str {
        match self {
            Architecture::Fd => "fd",
            Architecture::Fa => "fa",
            Architecture::Mrt => "mrt",
        }
    }
}

/// How the analog iteration updates the RIS phases.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PsiUpdate {
    /// Co-phase every reflected term with the direct term `gᵀf`: the exact
    /// maximizer for fixed `f`.
    #[default]
    CoPhaseWithDirect,
    /// Align reflected terms to phase zero and ignore the direct term.
    IndirectOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationSettings {
    /// Stop when the relative objective change drops below this.
    pub tol: f64,
    pub max_iter: usize,
    pub psi_update: PsiUpdate,
    /// Extra digital runs from random unimodular starts; the best is kept.
    pub restarts: usize,
    pub restart_seed: u64,
}

impl Default for IterationSettings {
    fn default() -> Self {
        Self { tol: 1e-9, max_iter: 1000, psi_update: PsiUpdate::default(), restarts: 0, restart_seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BeamformingResult {
    /// Transmit beamformer, length M.
    pub f: Array1<Complex64>,
    /// RIS phase vector, length N.
    pub psi: Array1<Complex64>,
    pub snr: f64,
    /// FD: `‖G f‖₁` per iterate. FA: SNR per iterate.
    pub objective_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// `x / |x|`, with the phase of 0 taken as 0.
#[inline]
pub(crate) fn unit_phase(x: Complex64) -> Complex64 {
    let r = x.norm();
    if r > 0.0 {
        x / r
    } else {
        ONE
    }
}

fn mat_vec(a: ArrayView2<Complex64>, x: ArrayView1<Complex64>) -> Array1<Complex64> {
    a.dot(&x)
}

/// `Aᴴ x`.
fn mat_h_vec(a: ArrayView2<Complex64>, x: ArrayView1<Complex64>) -> Array1<Complex64> {
    let mut out = Array1::from_elem(a.ncols(), ZERO);
    for (row, xi) in a.rows().into_iter().zip(x.iter()) {
        for (o, aij) in out.iter_mut().zip(row.iter()) {
            *o += aij.conj() * xi;
        }
    }
    out
}

fn l2_norm(x: ArrayView1<Complex64>) -> f64 {
    x.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}

fn l1_norm(x: ArrayView1<Complex64>) -> f64 {
    x.iter().map(|v| v.norm()).sum()
}

/// `‖G f‖₁`, the channel envelope under co-phased RIS elements.
pub fn l1_objective(ch: &ChannelRealization, f: ArrayView1<Complex64>) -> f64 {
    l1_norm(mat_vec(ch.stacked.view(), f).view())
}

fn check_dims(ch: &ChannelRealization, f: ArrayView1<Complex64>, psi: ArrayView1<Complex64>) -> Result<()> {
    if f.len() != ch.antennas() || psi.len() != ch.elements() {
        return Err(Error::Dimension(format!(
            "channel is {}x{} but f has {} entries and psi {}",
            ch.elements(),
            ch.antennas(),
            f.len(),
            psi.len()
        )));
    }
    Ok(())
}

/// Effective row channel `ψᵀE + μgᵀ` seen by the transmitter.
pub fn effective_channel(ch: &ChannelRealization, psi: ArrayView1<Complex64>) -> Array1<Complex64> {
    let mut w = ch.bs_user.mapv(|g| g * ch.mu);
    for (row, p) in ch.cascaded.rows().into_iter().zip(psi.iter()) {
        for (wm, e) in w.iter_mut().zip(row.iter()) {
            *wm += p * e;
        }
    }
    w
}

/// Received SNR `γ |ψᵀ E f + μ gᵀ f|²` for any `f`, `ψ` of matching size.
pub fn snr(ch: &ChannelRealization, f: ArrayView1<Complex64>, psi: ArrayView1<Complex64>, gamma: f64) -> Result<f64> {
    check_dims(ch, f, psi)?;
    let w = effective_channel(ch, psi);
    let y: Complex64 = w.iter().zip(f.iter()).map(|(a, b)| a * b).sum();
    Ok(gamma * y.norm_sqr())
}

/// RIS phases maximizing the SNR for a fixed `f`: each reflected term is
/// rotated onto the phase of the direct term `gᵀf` (phase 0 when there is
/// no direct term).
pub fn optimal_ris_phases(ch: &ChannelRealization, f: ArrayView1<Complex64>) -> Array1<Complex64> {
    ris_phases(ch, f, PsiUpdate::CoPhaseWithDirect)
}

fn ris_phases(ch: &ChannelRealization, f: ArrayView1<Complex64>, rule: PsiUpdate) -> Array1<Complex64> {
    let ef = mat_vec(ch.cascaded.view(), f);
    let reference = match rule {
        PsiUpdate::CoPhaseWithDirect => {
            let direct: Complex64 = ch.bs_user.iter().zip(f.iter()).map(|(g, x)| g * x).sum::<Complex64>() * ch.mu;
            unit_phase(direct)
        }
        PsiUpdate::IndirectOnly => ONE,
    };
    ef.mapv(|x| reference * unit_phase(x).conj())
}

/// Right singular direction of `G` with the largest singular value, by power
/// iteration on `GᴴG`.
fn dominant_direction(g: ArrayView2<Complex64>) -> Array1<Complex64> {
    let m = g.ncols();
    let best_col = (0..m)
        .max_by(|&a, &b| l2_norm(g.column(a)).total_cmp(&l2_norm(g.column(b))))
        .unwrap_or(0);
    let mut v = Array1::from_elem(m, ZERO);
    v[best_col] = ONE;
    for _ in 0..1000 {
        let next = mat_h_vec(g, mat_vec(g, v.view()).view());
        let norm = l2_norm(next.view());
        if norm == 0.0 {
            break;
        }
        let next = next / Complex64::new(norm, 0.0);
        // compare up to a global phase
        let overlap: Complex64 = v.iter().zip(next.iter()).map(|(a, b)| a.conj() * b).sum();
        v = next;
        if 1.0 - overlap.norm() < 1e-15 {
            break;
        }
    }
    v
}

fn converged_rel(prev: f64, next: f64, tol: f64) -> bool {
    (next - prev).abs() <= tol * next.abs().max(f64::MIN_POSITIVE)
}

/// Matched-filter baseline: `f₀` along the dominant singular direction of
/// `G`, co-phase the RIS for `f₀`, then match `f` to the resulting effective
/// channel and re-phase the RIS once.
pub fn mrt_beamformer(ch: &ChannelRealization, gamma: f64) -> BeamformingResult {
    let f0 = dominant_direction(ch.stacked.view());
    let psi0 = optimal_ris_phases(ch, f0.view());
    let w = effective_channel(ch, psi0.view());
    let norm = l2_norm(w.view());
    let f = if norm > 0.0 { w.mapv(|x| x.conj() / norm) } else { f0.clone() };
    let psi = optimal_ris_phases(ch, f.view());
    let snr = snr(ch, f.view(), psi.view(), gamma).expect("shapes follow the channel");
    BeamformingResult {
        objective_trace: vec![l1_objective(ch, f0.view()), l1_objective(ch, f.view())],
        f,
        psi,
        snr,
        iterations: 1,
        converged: true,
    }
}

/// One run of the FD fixed-point iteration from the unimodular start `u`.
fn digital_from(ch: &ChannelRealization, mut u: Array1<Complex64>, settings: &IterationSettings) -> (Array1<Complex64>, Vec<f64>, usize, bool) {
    let g = ch.stacked.view();
    let mut f = Array1::from_elem(ch.antennas(), ZERO);
    f[0] = ONE;
    let mut trace = Vec::new();
    let mut iterations = 0;
    let mut converged = false;
    while iterations < settings.max_iter.max(1) {
        iterations += 1;
        let v = mat_h_vec(g, u.view());
        let norm = l2_norm(v.view());
        if norm == 0.0 {
            converged = true;
            break;
        }
        f = v / Complex64::new(norm, 0.0);
        let gf = mat_vec(g, f.view());
        let objective = l1_norm(gf.view());
        u = gf.mapv(unit_phase);
        let done = trace.last().is_some_and(|&prev| converged_rel(prev, objective, settings.tol));
        trace.push(objective);
        if done {
            converged = true;
            break;
        }
    }
    (f, trace, iterations, converged)
}

/// FD design: L1-PCA fixed point on `G`, warm-started at the MRT direction.
pub fn digital_beamformer(ch: &ChannelRealization, gamma: f64, settings: &IterationSettings) -> BeamformingResult {
    let start = mrt_beamformer(ch, gamma).f;
    let g = ch.stacked.view();
    let u0 = mat_vec(g, start.view()).mapv(unit_phase);
    let initial = l1_objective(ch, start.view());

    let (mut f, mut trace, mut iterations, mut converged) = digital_from(ch, u0, settings);
    trace.insert(0, initial);

    if settings.restarts > 0 {
        let mut rng = trial_rng(settings.restart_seed, u64::MAX);
        for _ in 0..settings.restarts {
            let u = Array1::from_shape_fn(ch.elements() + 1, |_| {
                Complex64::from_polar(1.0, rng.random::<f64>() * std::f64::consts::TAU)
            });
            let (f_r, trace_r, it_r, conv_r) = digital_from(ch, u, settings);
            if trace_r.last().copied().unwrap_or(0.0) > trace.last().copied().unwrap_or(0.0) {
                f = f_r;
                trace = trace_r;
                iterations = it_r;
                converged = conv_r;
            }
        }
    }

    let psi = optimal_ris_phases(ch, f.view());
    let snr = snr(ch, f.view(), psi.view(), gamma).expect("shapes follow the channel");
    BeamformingResult { f, psi, snr, objective_trace: trace, iterations, converged }
}

/// Phase-only beamformer matched to the effective channel `w`:
/// `f_m = e^{-j∠w_m}/√M`.
fn phase_matched(w: ArrayView1<Complex64>) -> Array1<Complex64> {
    let scale = 1.0 / (w.len() as f64).sqrt();
    w.mapv(|x| unit_phase(x).conj() * scale)
}

/// FA design: alternate RIS phases for fixed `f` and the phase-matched
/// `f` for fixed RIS phases, starting from the MRT beamformer projected onto
/// the constant-modulus set.
pub fn analog_beamformer(ch: &ChannelRealization, gamma: f64, settings: &IterationSettings) -> BeamformingResult {
    let m = ch.antennas();
    let scale = 1.0 / (m as f64).sqrt();
    let mut f = mrt_beamformer(ch, gamma).f.mapv(|x| unit_phase(x) * scale);
    let mut psi = ris_phases(ch, f.view(), settings.psi_update);
    let mut trace = vec![snr(ch, f.view(), psi.view(), gamma).expect("shapes follow the channel")];
    let mut iterations = 0;
    let mut converged = false;
    while iterations < settings.max_iter.max(1) {
        iterations += 1;
        psi = ris_phases(ch, f.view(), settings.psi_update);
        let w = effective_channel(ch, psi.view());
        f = phase_matched(w.view());
        let value = gamma * (l1_norm(w.view()) * scale).powi(2);
        let prev = *trace.last().expect("trace starts non-empty");
        trace.push(value);
        if converged_rel(prev, value, settings.tol) {
            converged = true;
            break;
        }
    }
    let psi = ris_phases(ch, f.view(), settings.psi_update);
    let snr = snr(ch, f.view(), psi.view(), gamma).expect("shapes follow the channel");
    BeamformingResult { f, psi, snr, objective_trace: trace, iterations, converged }
}

/// Dispatch on the architecture.
pub fn beamform(ch: &ChannelRealization, arch: Architecture, gamma: f64, settings: &IterationSettings) -> BeamformingResult {
    match arch {
        Architecture::Fd => digital_beamformer(ch, gamma, settings),
        Architecture::Fa => analog_beamformer(ch, gamma, settings),
        Architecture::Mrt => mrt_beamformer(ch, gamma),
    }
}

/// Calls `visit` with every point of the `dims`-dimensional phase grid with
/// `points` phases per dimension.
fn for_each_grid_point(dims: usize, points: usize, phasors: &[Complex64], mut visit: impl FnMut(&[Complex64])) {
    let mut idx = vec![0usize; dims];
    let mut current = vec![ONE; dims];
    loop {
        for (c, &i) in current.iter_mut().zip(&idx) {
            *c = phasors[i];
        }
        visit(&current);
        let mut d = 0;
        loop {
            if d == dims {
                return;
            }
            idx[d] += 1;
            if idx[d] < points {
                break;
            }
            idx[d] = 0;
            d += 1;
        }
    }
}

/// Exhaustive search on a uniform phase grid, used as a validation oracle.
///
/// FD: grid over the RIS phases, with the matched filter `f = wᴴ/‖w‖` exact
/// for each grid point. FA: grid over the beamformer phases (first antenna
/// fixed, the SNR is invariant to a common phase), with the RIS phases exact.
pub fn oracle_grid_search(
    ch: &ChannelRealization,
    arch: Architecture,
    gamma: f64,
    grid_points_per_dim: usize,
) -> Result<BeamformingResult> {
    let n = ch.elements();
    let m = ch.antennas();
    let points = grid_points_per_dim.max(1);
    let phasors: Vec<Complex64> = (0..points)
        .map(|k| Complex64::from_polar(1.0, std::f64::consts::TAU * k as f64 / points as f64))
        .collect();
    match arch {
        Architecture::Fd | Architecture::Mrt => {
            if n > 3 {
                return Err(Error::TooLarge(format!("FD grid search needs N <= 3, got N = {n}")));
            }
            // Without a direct link a common RIS phase is irrelevant.
            let fixed_first = !ch.has_direct_link();
            let dims = if fixed_first { n - 1 } else { n };
            let mut best = (-1.0, Array1::from_elem(n, ONE));
            let mut psi = Array1::from_elem(n, ONE);
            for_each_grid_point(dims, points, &phasors, |pt| {
                let offset = n - dims;
                for (k, p) in pt.iter().enumerate() {
                    psi[offset + k] = *p;
                }
                let w = effective_channel(ch, psi.view());
                let value = w.iter().map(|x| x.norm_sqr()).sum::<f64>();
                if value > best.0 {
                    best = (value, psi.clone());
                }
            });
            let w = effective_channel(ch, best.1.view());
            let norm = l2_norm(w.view());
            let mut f = Array1::from_elem(m, ZERO);
            if norm > 0.0 {
                f = w.mapv(|x| x.conj() / norm);
            } else {
                f[0] = ONE;
            }
            let psi = best.1;
            let snr = snr(ch, f.view(), psi.view(), gamma)?;
            Ok(BeamformingResult { f, psi, snr, objective_trace: vec![snr], iterations: 1, converged: true })
        }
        Architecture::Fa => {
            if m > 3 {
                return Err(Error::TooLarge(format!("FA grid search needs M <= 3, got M = {m}")));
            }
            let scale = 1.0 / (m as f64).sqrt();
            let mut f = Array1::from_elem(m, Complex64::new(scale, 0.0));
            let mut best = (-1.0, f.clone());
            for_each_grid_point(m - 1, points, &phasors, |pt| {
                for (k, p) in pt.iter().enumerate() {
                    f[k + 1] = p * scale;
                }
                let value = l1_objective(ch, f.view());
                if value > best.0 {
                    best = (value, f.clone());
                }
            });
            let f = best.1;
            let psi = optimal_ris_phases(ch, f.view());
            let snr = snr(ch, f.view(), psi.view(), gamma)?;
            Ok(BeamformingResult { f, psi, snr, objective_trace: vec![snr], iterations: 1, converged: true })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{draw_channel, los_channel};
    use crate::config::SystemConfig;
    use ndarray::{array, Array2};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_channel(m: usize, n: usize, k: f64, direct: bool, seed: u64) -> ChannelRealization {
        let mut cfg = SystemConfig { m, n, direct_link: direct, ..SystemConfig::default() };
        cfg.set_rician_factor(k);
        draw_channel(&cfg, &mut trial_rng(seed, 0))
    }

    #[test]
    fn snr_trivial_cases() {
        let ch = ChannelRealization::from_links(array![[c(1.0, 0.0)]], array![c(1.0, 0.0)], array![c(1.0, 0.0)], 0.0).unwrap();
        assert_eq!(snr(&ch, array![c(1.0, 0.0)].view(), array![c(1.0, 0.0)].view(), 1.0).unwrap(), 1.0);
        assert_eq!(snr(&ch, array![ZERO].view(), array![c(1.0, 0.0)].view(), 1.0).unwrap(), 0.0);
        assert!(snr(&ch, array![ONE, ONE].view(), array![ONE].view(), 1.0).is_err());
    }

    #[test]
    fn single_element_phase_is_conjugate() {
        let phi = 0.7;
        let ch = ChannelRealization::from_links(array![[Complex64::from_polar(2.0, phi)]], array![ONE], array![ONE], 0.0).unwrap();
        let psi = optimal_ris_phases(&ch, array![ONE].view());
        assert!((psi[0] - Complex64::from_polar(1.0, -phi)).norm() < 1e-15);
    }

    #[test]
    fn optimal_phases_co_phase_all_terms() {
        for seed in 0..20 {
            let ch = random_channel(3, 6, 1.0, true, seed);
            let f = Array1::from_shape_fn(3, |i| Complex64::from_polar(1.0 / 3f64.sqrt(), i as f64 * 0.9 + seed as f64));
            let psi = optimal_ris_phases(&ch, f.view());
            let ef = ch.cascaded.dot(&f);
            let direct: Complex64 = ch.bs_user.iter().zip(f.iter()).map(|(g, x)| g * x * ch.mu).sum();
            let reference = direct.arg();
            for (p, e) in psi.iter().zip(ef.iter()) {
                assert!((p.norm() - 1.0).abs() < 1e-12);
                let term = p * e;
                let d = (term.arg() - reference + std::f64::consts::PI).rem_euclid(std::f64::consts::TAU) - std::f64::consts::PI;
                assert!(d.abs() < 1e-9);
            }
            let got = snr(&ch, f.view(), psi.view(), 2.0).unwrap();
            let want = 2.0 * l1_objective(&ch, f.view()).powi(2);
            assert!((got - want).abs() < 1e-10 * want);
        }
    }

    #[test]
    fn optimal_phases_beat_random_phases() {
        let ch = random_channel(2, 8, 1.0, true, 5);
        let mut rng = trial_rng(77, 0);
        let f = array![c(0.6, 0.0), c(0.0, 0.8)];
        let best = snr(&ch, f.view(), optimal_ris_phases(&ch, f.view()).view(), 1.0).unwrap();
        for _ in 0..1000 {
            let psi = Array1::from_shape_fn(8, |_| Complex64::from_polar(1.0, rng.random::<f64>() * 6.3));
            assert!(snr(&ch, f.view(), psi.view(), 1.0).unwrap() <= best + 1e-12);
        }
    }

    #[test]
    fn rank_one_digital_is_immediate() {
        let a = array![c(1.0, 2.0), c(-0.5, 0.1), c(0.3, -0.3)];
        let b = array![c(0.2, 1.0), c(2.0, -1.0)];
        let e = Array2::from_shape_fn((3, 2), |(i, j)| a[i] * b[j]);
        let ch = ChannelRealization::from_cascaded(e, array![ZERO, ZERO], 0.0).unwrap();
        let res = digital_beamformer(&ch, 1.0, &IterationSettings::default());
        let a1: f64 = a.iter().map(|x| x.norm()).sum();
        let b2 = l2_norm(b.view());
        assert!((res.objective_trace.last().unwrap() - a1 * b2).abs() < 1e-12 * a1 * b2);
        assert!(res.iterations <= 2 && res.converged);
        // f ∝ b*
        let overlap: Complex64 = res.f.iter().zip(b.iter()).map(|(f, b)| f * b).sum();
        assert!((overlap.norm() - b2).abs() < 1e-12);
        let mrt = mrt_beamformer(&ch, 1.0);
        assert!((mrt.snr - res.snr).abs() < 1e-10 * res.snr);
    }

    #[test]
    fn constraints_hold_on_results() {
        for seed in 0..30 {
            let ch = random_channel(4, 9, 1.0, seed % 2 == 0, seed);
            let fd = digital_beamformer(&ch, 1.0, &IterationSettings::default());
            assert!((l2_norm(fd.f.view()) - 1.0).abs() < 1e-10);
            let fa = analog_beamformer(&ch, 1.0, &IterationSettings::default());
            assert!(fa.f.iter().all(|x| (x.norm() - 0.5).abs() < 1e-10));
            for r in [&fd, &fa] {
                assert!(r.psi.iter().all(|p| (p.norm() - 1.0).abs() < 1e-10));
                assert!(r.iterations >= 1);
            }
            let mrt = mrt_beamformer(&ch, 1.0);
            assert!(mrt.snr <= fd.snr * (1.0 + 1e-12));
            assert!(fa.snr <= fd.snr * (1.0 + 1e-9));
        }
    }

    #[test]
    fn single_antenna_architectures_coincide() {
        for seed in 0..10 {
            let ch = random_channel(1, 7, 2.0, true, seed);
            let fd = digital_beamformer(&ch, 1.0, &IterationSettings::default());
            let fa = analog_beamformer(&ch, 1.0, &IterationSettings::default());
            assert!((fd.snr - fa.snr).abs() < 1e-10 * fd.snr);
        }
    }

    #[test]
    fn los_no_direct_link_reaches_coherent_gain() {
        let mut cfg = SystemConfig { m: 4, n: 64, direct_link: false, ..SystemConfig::default() };
        cfg.set_rician_factor(f64::INFINITY);
        let ch = los_channel(&cfg);
        let want = 4.0 * 64.0 * 64.0;
        for arch in [Architecture::Fd, Architecture::Fa, Architecture::Mrt] {
            let r = beamform(&ch, arch, 1.0, &IterationSettings::default());
            assert!((r.snr - want).abs() < 1e-9 * want, "{arch:?}: {}", r.snr);
        }
        let fa = analog_beamformer(&ch, 1.0, &IterationSettings::default());
        let a = crate::channel::steering_vector(4, cfg.theta_bd_i, cfg.d_over_lambda);
        // f = e^{-j∠a}/√M up to a common phase
        let rot = fa.f[0] / (a[0].conj() * 0.5);
        for (f, a) in fa.f.iter().zip(a.iter()) {
            assert!((f - a.conj() * 0.5 * rot).norm() < 1e-10);
        }
    }

    #[test]
    fn grid_oracle_single_element_without_direct_link() {
        let ch = random_channel(3, 1, 0.0, false, 3);
        let grid = oracle_grid_search(&ch, Architecture::Fd, 1.0, 360).unwrap();
        let exact = ch.cascaded.row(0).iter().map(|x| x.norm_sqr()).sum::<f64>();
        assert!((grid.snr - exact).abs() < 1e-12 * exact);
    }

    #[test]
    fn grid_oracle_with_direct_link_within_quantization() {
        let ch = random_channel(2, 1, 1.0, true, 8);
        let grid = oracle_grid_search(&ch, Architecture::Fd, 1.0, 360).unwrap();
        let fd = digital_beamformer(&ch, 1.0, &IterationSettings::default());
        // Worst-case loss of a half-step phase error on one of two summands.
        let slack = 1.0 - (std::f64::consts::PI / 360.0).cos();
        assert!(grid.snr <= fd.snr * (1.0 + 1e-9));
        assert!(grid.snr >= fd.snr * (1.0 - 2.0 * slack));
    }

    #[test]
    fn grid_refinement_never_hurts() {
        for seed in 0..5 {
            let ch = random_channel(2, 2, 1.0, true, seed);
            for arch in [Architecture::Fd, Architecture::Fa] {
                let coarse = oracle_grid_search(&ch, arch, 1.0, 90).unwrap();
                let fine = oracle_grid_search(&ch, arch, 1.0, 360).unwrap();
                assert!(fine.snr >= coarse.snr - 1e-12 * coarse.snr);
            }
        }
    }

    #[test]
    fn grid_oracle_guards_size() {
        let ch = random_channel(4, 4, 1.0, true, 0);
        assert!(matches!(oracle_grid_search(&ch, Architecture::Fd, 1.0, 10), Err(Error::TooLarge(_))));
        assert!(matches!(oracle_grid_search(&ch, Architecture::Fa, 1.0, 10), Err(Error::TooLarge(_))));
    }

    #[test]
    fn l1_norm_is_max_over_unimodular_correlation() {
        let ch = random_channel(3, 5, 1.0, true, 12);
        let mut rng = trial_rng(5, 5);
        for _ in 0..50 {
            let f = Array1::from_shape_fn(3, |_| crate::channel::complex_normal(&mut rng));
            let gf = ch.stacked.dot(&f);
            let u = gf.mapv(unit_phase);
            let attained: f64 = u.iter().zip(gf.iter()).map(|(u, x)| (u.conj() * x).re).sum();
            assert!((attained - l1_norm(gf.view())).abs() < 1e-12 * attained);
            for _ in 0..20 {
                let v = Array1::from_shape_fn(6, |_| Complex64::from_polar(1.0, rng.random::<f64>() * 6.3));
                let other: f64 = v.iter().zip(gf.iter()).map(|(u, x)| (u.conj() * x).re).sum();
                assert!(other <= attained + 1e-12);
            }
        }
    }

    #[test]
    fn digital_is_scale_equivariant() {
        let ch = random_channel(3, 6, 1.0, true, 2);
        let base = digital_beamformer(&ch, 1.0, &IterationSettings::default());
        let scaled = digital_beamformer(&ch.scaled(3.0), 1.0, &IterationSettings::default());
        assert!((scaled.objective_trace.last().unwrap() - 3.0 * base.objective_trace.last().unwrap()).abs() < 1e-9);
        for (a, b) in base.f.iter().zip(scaled.f.iter()) {
            assert!((a - b).norm() < 1e-9);
        }
    }

    #[test]
    fn restarts_never_lower_the_objective() {
        for seed in 0..10 {
            let ch = random_channel(4, 12, 0.0, true, seed);
            let plain = digital_beamformer(&ch, 1.0, &IterationSettings::default());
            let multi = digital_beamformer(&ch, 1.0, &IterationSettings { restarts: 8, restart_seed: seed, ..Default::default() });
            assert!(multi.snr >= plain.snr * (1.0 - 1e-12));
        }
    }

    #[test]
    fn non_convergence_is_reported() {
        let ch = random_channel(4, 16, 0.0, true, 1);
        let res = digital_beamformer(&ch, 1.0, &IterationSettings { max_iter: 1, tol: 0.0, ..Default::default() });
        assert!(!res.converged);
        assert_eq!(res.iterations, 1);
    }

    #[test]
    fn indirect_only_rule_matches_default_without_direct_link() {
        let ch = random_channel(3, 8, 1.0, false, 4);
        let a = analog_beamformer(&ch, 1.0, &IterationSettings::default());
        let b = analog_beamformer(&ch, 1.0, &IterationSettings { psi_update: PsiUpdate::IndirectOnly, ..Default::default() });
        assert!((a.snr - b.snr).abs() < 1e-10 * a.snr);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]
            #[test]
            fn traces_are_monotone(seed in 0u64..10_000, m in 1usize..6, n in 1usize..20, k in prop::sample::select(vec![0.0, 1.0, 10.0])) {
                let ch = random_channel(m, n, k, seed % 3 != 0, seed);
                for r in [digital_beamformer(&ch, 1.0, &IterationSettings::default()), analog_beamformer(&ch, 1.0, &IterationSettings::default())] {
                    for w in r.objective_trace.windows(2) {
                        prop_assert!(w[1] >= w[0] - 1e-12 * w[0].max(1.0));
                    }
                }
            }
        }
    }
}
