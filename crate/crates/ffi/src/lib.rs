//! C ABI over `riscap`.
//!
//! Objects are opaque handles created by `*_new`/`*_draw` style functions and
//! released with the matching `*_free`. Fallible functions return a
//! [`RiscapStatus`] and write results through out-pointers; the message of
//! the last failure on the calling thread is available from
//! [`riscap_last_error`]. Complex vectors are passed as interleaved
//! `(re, im)` pairs of `double`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use num_complex::Complex64;

use riscap::beamforming::{beamform, Architecture, BeamformingResult, IterationSettings};
use riscap::bounds::{capacity, snr_upper_bound};
use riscap::channel::{draw_channel, los_channel, trial_rng, ChannelRealization};
use riscap::config::{Level, SystemConfig};
use riscap::outage::{
    invert_mgf_to_cdf, monte_carlo_capacity, monte_carlo_outage, outage_lower_bound, BoundScaling, EulerSettings,
    MgfEvaluator, MgfSettings,
};
use riscap::specfun::{self, RicianParams};
use riscap::Error;

pub const RISCAP_ARCH_FD: u32 = 0;
pub const RISCAP_ARCH_FA: u32 = 1;
pub const RISCAP_ARCH_MRT: u32 = 2;

pub const RISCAP_SCALING_PER_ANTENNA: u32 = 0;
pub const RISCAP_SCALING_UNNORMALIZED: u32 = 1;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RiscapStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Numerical = 3,
    BufferTooSmall = 4,
    Panic = 5,
}

/// Opaque system configuration.
pub struct RiscapConfig(SystemConfig);
/// Opaque channel realization.
pub struct RiscapChannel(ChannelRealization);
/// Opaque beamforming result.
pub struct RiscapResult(BeamformingResult);
/// Opaque MGF evaluator of the cascaded envelope sum.
pub struct RiscapMgf(MgfEvaluator);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn fail(status: RiscapStatus, msg: &str) -> RiscapStatus {
    set_error(msg);
    status
}

fn from_error(e: Error) -> RiscapStatus {
    let status = if e.is_numerical() { RiscapStatus::Numerical } else { RiscapStatus::InvalidArgument };
    fail(status, &e.to_string())
}

/// Runs `f`, converting panics into [`RiscapStatus::Panic`].
fn guard(f: impl FnOnce() -> RiscapStatus) -> RiscapStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => fail(RiscapStatus::Panic, "internal panic"),
    }
}

macro_rules! non_null {
    ($($p:expr),+) => {
        $( if $p.is_null() { return fail(RiscapStatus::NullPointer, concat!("null pointer: ", stringify!($p))); } )+
    };
}

fn architecture(code: u32) -> Option<Architecture> {
    match code {
        RISCAP_ARCH_FD => Some(Architecture::Fd),
        RISCAP_ARCH_FA => Some(Architecture::Fa),
        RISCAP_ARCH_MRT => Some(Architecture::Mrt),
        _ => None,
    }
}

fn boxed<T>(value: T, out: *mut *mut T) -> RiscapStatus {
    // SAFETY: callers check `out` for null.
    unsafe { *out = Box::into_raw(Box::new(value)) };
    RiscapStatus::Ok
}

/// Message of the last failure on this thread; empty if none. Valid until the
/// next failing call on the same thread.
#[no_mangle]
pub extern "C" fn riscap_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

// ---------------------------------------------------------------- config

/// Default configuration.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn riscap_config_default(out: *mut *mut RiscapConfig) -> RiscapStatus {
    guard(|| {
        non_null!(out);
        boxed(RiscapConfig(SystemConfig::default()), out)
    })
}

/// Parses a TOML configuration.
///
/// # Safety
/// `toml` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn riscap_config_from_toml(toml: *const c_char, out: *mut *mut RiscapConfig) -> RiscapStatus {
    guard(|| {
        non_null!(toml, out);
        let text = match CStr::from_ptr(toml).to_str() {
            Ok(t) => t,
            Err(_) => return fail(RiscapStatus::InvalidArgument, "config text is not UTF-8"),
        };
        match SystemConfig::from_toml_str(text) {
            Ok(cfg) => boxed(RiscapConfig(cfg), out),
            Err(e) => from_error(e),
        }
    })
}

/// # Safety
/// `cfg` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn riscap_config_free(cfg: *mut RiscapConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

/// Sets the antenna count `m` and RIS size `n`.
///
/// # Safety
/// `cfg` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn riscap_config_set_dims(cfg: *mut RiscapConfig, m: usize, n: usize) -> RiscapStatus {
    guard(|| {
        non_null!(cfg);
        if m == 0 || n == 0 {
            return fail(RiscapStatus::InvalidArgument, "m and n must be >= 1");
        }
        (*cfg).0.m = m;
        (*cfg).0.n = n;
        RiscapStatus::Ok
    })
}

/// Sets the Rician factor of all links; `INFINITY` gives pure LoS.
///
/// # Safety
/// `cfg` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn riscap_config_set_rician_factor(cfg: *mut RiscapConfig, k: f64) -> RiscapStatus {
    guard(|| {
        non_null!(cfg);
        if k.is_nan() || k < 0.0 {
            return fail(RiscapStatus::InvalidArgument, "rician factor must be >= 0");
        }
        (*cfg).0.set_rician_factor(k);
        RiscapStatus::Ok
    })
}

/// Enables or disables the direct link and sets its linear amplitude ratio `mu`.
///
/// # Safety
/// `cfg` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn riscap_config_set_direct_link(cfg: *mut RiscapConfig, enabled: bool, mu: f64) -> RiscapStatus {
    guard(|| {
        non_null!(cfg);
        if !(mu >= 0.0 && mu.is_finite()) {
            return fail(RiscapStatus::InvalidArgument, "mu must be finite and >= 0");
        }
        (*cfg).0.direct_link = enabled;
        (*cfg).0.mu = Some(Level::linear(mu));
        RiscapStatus::Ok
    })
}

/// Sets the linear SNR scale `gamma`.
///
/// # Safety
/// `cfg` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn riscap_config_set_gamma(cfg: *mut RiscapConfig, gamma: f64) -> RiscapStatus {
    guard(|| {
        non_null!(cfg);
        if !(gamma > 0.0 && gamma.is_finite()) {
            return fail(RiscapStatus::InvalidArgument, "gamma must be positive");
        }
        (*cfg).0.gamma = Some(Level::linear(gamma));
        RiscapStatus::Ok
    })
}

/// Effective linear `gamma` of the configuration.
///
/// # Safety
/// `cfg` and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn riscap_config_gamma(cfg: *const RiscapConfig, out: *mut f64) -> RiscapStatus {
    guard(|| {
        non_null!(cfg, out);
        *out = (*cfg).0.gamma();
        RiscapStatus::Ok
    })
}

// ---------------------------------------------------------------- channel

/// Draws the channel of trial `trial` under `seed`, identical to the CLI draws.
///
/// # Safety
/// `cfg` must be a live handle and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn riscap_channel_draw(
    cfg: *const RiscapConfig,
    seed: u64,
    trial: u64,
    out: *mut *mut RiscapChannel,
) -> RiscapStatus {
    guard(|| {
        non_null!(cfg, out);
        if let Err(e) = (*cfg).0.validate() {
            return from_error(e);
        }
        let ch = draw_channel(&(*cfg).0, &mut trial_rng(seed, trial));
        boxed(RiscapChannel(ch), out)
    })
}

/// Pure line-of-sight channel of the configured geometry.
///
/// # Safety
/// `cfg` must be a live handle and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn riscap_channel_los(cfg: *const RiscapConfig, out: *mut *mut RiscapChannel) -> RiscapStatus {
    guard(|| {
        non_null!(cfg, out);
        if let Err(e) = (*cfg).0.validate() {
            return from_error(e);
        }
        boxed(RiscapChannel(los_channel(&(*cfg).0)), out)
    })
}

/// # Safety
/// `ch` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn riscap_channel_free(ch: *mut RiscapChannel) {
    if !ch.is_null() {
        drop(Box::from_raw(ch));
    }
}

/// Antenna count `m` and RIS size `n` of a channel.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn riscap_channel_dims(ch: *const RiscapChannel, m: *mut usize, n: *mut usize) -> RiscapStatus {
    guard(|| {
        non_null!(ch, m, n);
        *m = (*ch).0.antennas();
        *n = (*ch).0.elements();
        RiscapStatus::Ok
    })
}

/// `Γ^UB = (γ/M)‖G‖₁,₁²`.
///
/// # Safety
/// `ch` must be a live handle and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn riscap_snr_upper_bound(ch: *const RiscapChannel, gamma: f64, out: *mut f64) -> RiscapStatus {
    guard(|| {
        non_null!(ch, out);
        *out = snr_upper_bound(&(*ch).0, gamma);
        RiscapStatus::Ok
    })
}

/// `log₂(1 + snr)`.
///
/// # Safety
/// `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn riscap_capacity(snr: f64, out: *mut f64) -> RiscapStatus {
    guard(|| {
        non_null!(out);
        match capacity(snr) {
            Ok(c) => {
                *out = c;
                RiscapStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

// ---------------------------------------------------------------- beamforming

/// Runs one architecture (`RISCAP_ARCH_*`) with default iteration settings.
///
/// # Safety
/// `ch` must be a live handle and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn riscap_beamform(
    ch: *const RiscapChannel,
    arch: u32,
    gamma: f64,
    out: *mut *mut RiscapResult,
) -> RiscapStatus {
    guard(|| {
        non_null!(ch, out);
        let Some(arch) = architecture(arch) else {
            return fail(RiscapStatus::InvalidArgument, "unknown architecture code");
        };
        if !(gamma > 0.0 && gamma.is_finite()) {
            return fail(RiscapStatus::InvalidArgument, "gamma must be positive");
        }
        boxed(RiscapResult(beamform(&(*ch).0, arch, gamma, &IterationSettings::default())), out)
    })
}

/// # Safety
/// `r` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn riscap_result_free(r: *mut RiscapResult) {
    if !r.is_null() {
        drop(Box::from_raw(r));
    }
}

/// Achieved SNR, iteration count and convergence flag.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn riscap_result_summary(
    r: *const RiscapResult,
    snr: *mut f64,
    iterations: *mut usize,
    converged: *mut bool,
) -> RiscapStatus {
    guard(|| {
        non_null!(r, snr, iterations, converged);
        *snr = (*r).0.snr;
        *iterations = (*r).0.iterations;
        *converged = (*r).0.converged;
        RiscapStatus::Ok
    })
}

unsafe fn copy_complex(src: &[Complex64], buf: *mut f64, len: usize) -> RiscapStatus {
    if len < 2 * src.len() {
        return fail(RiscapStatus::BufferTooSmall, &format!("need {} doubles", 2 * src.len()));
    }
    for (i, z) in src.iter().enumerate() {
        *buf.add(2 * i) = z.re;
        *buf.add(2 * i + 1) = z.im;
    }
    RiscapStatus::Ok
}

/// Copies the transmit beamformer `f` (M complex values) into `buf`.
///
/// # Safety
/// `buf` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn riscap_result_transmit(r: *const RiscapResult, buf: *mut f64, len: usize) -> RiscapStatus {
    guard(|| {
        non_null!(r, buf);
        copy_complex(&(*r).0.f.to_vec(), buf, len)
    })
}

/// Copies the RIS phase vector `ψ` (N complex values) into `buf`.
///
/// # Safety
/// `buf` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn riscap_result_phases(r: *const RiscapResult, buf: *mut f64, len: usize) -> RiscapStatus {
    guard(|| {
        non_null!(r, buf);
        copy_complex(&(*r).0.psi.to_vec(), buf, len)
    })
}

/// Length of the objective trace.
///
/// # Safety
/// `r` and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn riscap_result_trace_len(r: *const RiscapResult, out: *mut usize) -> RiscapStatus {
    guard(|| {
        non_null!(r, out);
        *out = (*r).0.objective_trace.len();
        RiscapStatus::Ok
    })
}

/// Copies the objective trace into `buf`.
///
/// # Safety
/// `buf` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn riscap_result_trace(r: *const RiscapResult, buf: *mut f64, len: usize) -> RiscapStatus {
    guard(|| {
        non_null!(r, buf);
        let trace = &(*r).0.objective_trace;
        if len < trace.len() {
            return fail(RiscapStatus::BufferTooSmall, &format!("need {} doubles", trace.len()));
        }
        ptr::copy_nonoverlapping(trace.as_ptr(), buf, trace.len());
        RiscapStatus::Ok
    })
}

// ---------------------------------------------------------------- special functions

/// Modified Bessel function `I₀(x)`.
#[no_mangle]
pub extern "C" fn riscap_bessel_i0(x: f64) -> f64 {
    specfun::bessel_i0(x)
}

/// Marcum `Q₁(a, b)`; NaN for negative arguments.
#[no_mangle]
pub extern "C" fn riscap_marcum_q1(a: f64, b: f64) -> f64 {
    if a < 0.0 || b < 0.0 {
        return f64::NAN;
    }
    specfun::marcum_q1(a, b)
}

/// CDF at `x` of a Rician envelope with parameters `nu`, `sigma`.
///
/// # Safety
/// `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn riscap_rician_cdf(x: f64, nu: f64, sigma: f64, out: *mut f64) -> RiscapStatus {
    guard(|| {
        non_null!(out);
        match RicianParams::new(nu, sigma) {
            Ok(p) => {
                *out = p.cdf(x);
                RiscapStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

// ---------------------------------------------------------------- outage

/// MGF evaluator for the cascaded channel of `cfg`.
///
/// # Safety
/// `cfg` must be a live handle and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn riscap_mgf_new(cfg: *const RiscapConfig, out: *mut *mut RiscapMgf) -> RiscapStatus {
    guard(|| {
        non_null!(cfg, out);
        match MgfEvaluator::from_config(&(*cfg).0, MgfSettings::default()) {
            Ok(ev) => boxed(RiscapMgf(ev), out),
            Err(e) => from_error(e),
        }
    })
}

/// # Safety
/// `ev` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn riscap_mgf_free(ev: *mut RiscapMgf) {
    if !ev.is_null() {
        drop(Box::from_raw(ev));
    }
}

/// `E[e^{-sY}]` at `s = s_re + i s_im`, `s_re >= 0`.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn riscap_mgf_evaluate(
    ev: *const RiscapMgf,
    s_re: f64,
    s_im: f64,
    out_re: *mut f64,
    out_im: *mut f64,
) -> RiscapStatus {
    guard(|| {
        non_null!(ev, out_re, out_im);
        match (*ev).0.evaluate(Complex64::new(s_re, s_im)) {
            Ok(v) => {
                *out_re = v.re;
                *out_im = v.im;
                RiscapStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// `P[Y <= y]` by transform inversion.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn riscap_mgf_cdf(ev: *const RiscapMgf, y: f64, out: *mut f64) -> RiscapStatus {
    guard(|| {
        non_null!(ev, out);
        match invert_mgf_to_cdf(&(*ev).0, y, &EulerSettings::default()) {
            Ok(v) => {
                *out = v.value;
                RiscapStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// Analytic outage lower bound at `len` ascending linear thresholds.
///
/// # Safety
/// `betas` and `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn riscap_outage_lower_bound(
    ev: *const RiscapMgf,
    gamma: f64,
    betas: *const f64,
    len: usize,
    scaling: u32,
    out: *mut f64,
) -> RiscapStatus {
    guard(|| {
        non_null!(ev, betas, out);
        let scaling = match scaling {
            RISCAP_SCALING_PER_ANTENNA => BoundScaling::PerAntenna,
            RISCAP_SCALING_UNNORMALIZED => BoundScaling::Unnormalized,
            _ => return fail(RiscapStatus::InvalidArgument, "unknown scaling code"),
        };
        let betas = std::slice::from_raw_parts(betas, len);
        match outage_lower_bound(&(*ev).0, gamma, betas, scaling, &EulerSettings::default()) {
            Ok(c) => {
                ptr::copy_nonoverlapping(c.probabilities.as_ptr(), out, len);
                RiscapStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// Empirical outage `P[Γ < β]` at `len` ascending linear thresholds.
///
/// # Safety
/// `betas` and `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn riscap_monte_carlo_outage(
    cfg: *const RiscapConfig,
    arch: u32,
    betas: *const f64,
    len: usize,
    trials: usize,
    seed: u64,
    out: *mut f64,
) -> RiscapStatus {
    guard(|| {
        non_null!(cfg, betas, out);
        let Some(arch) = architecture(arch) else {
            return fail(RiscapStatus::InvalidArgument, "unknown architecture code");
        };
        let betas = std::slice::from_raw_parts(betas, len);
        match monte_carlo_outage(&(*cfg).0, arch, betas, trials, seed, &IterationSettings::default()) {
            Ok(c) => {
                ptr::copy_nonoverlapping(c.probabilities.as_ptr(), out, len);
                RiscapStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// Ergodic capacity estimate: sample mean and its standard error.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn riscap_monte_carlo_capacity(
    cfg: *const RiscapConfig,
    arch: u32,
    trials: usize,
    seed: u64,
    mean: *mut f64,
    std_err: *mut f64,
) -> RiscapStatus {
    guard(|| {
        non_null!(cfg, mean, std_err);
        let Some(arch) = architecture(arch) else {
            return fail(RiscapStatus::InvalidArgument, "unknown architecture code");
        };
        match monte_carlo_capacity(&(*cfg).0, arch, trials, seed, &IterationSettings::default()) {
            Ok(est) => {
                *mean = est.mean;
                *std_err = est.std_err;
                RiscapStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}
