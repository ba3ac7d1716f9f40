use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use riscap_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(riscap_last_error()) }.to_string_lossy().into_owned()
}

#[test]
fn los_beamforming_through_handles() {
    unsafe {
        let mut cfg = ptr::null_mut();
        assert_eq!(riscap_config_default(&mut cfg), RiscapStatus::Ok);
        assert_eq!(riscap_config_set_dims(cfg, 4, 64), RiscapStatus::Ok);
        assert_eq!(riscap_config_set_rician_factor(cfg, f64::INFINITY), RiscapStatus::Ok);
        assert_eq!(riscap_config_set_direct_link(cfg, false, 0.0), RiscapStatus::Ok);
        let mut ch = ptr::null_mut();
        assert_eq!(riscap_channel_los(cfg, &mut ch), RiscapStatus::Ok);
        let (mut m, mut n) = (0, 0);
        assert_eq!(riscap_channel_dims(ch, &mut m, &mut n), RiscapStatus::Ok);
        assert_eq!((m, n), (4, 64));

        for arch in [RISCAP_ARCH_FD, RISCAP_ARCH_FA] {
            let mut res = ptr::null_mut();
            assert_eq!(riscap_beamform(ch, arch, 1.0, &mut res), RiscapStatus::Ok);
            let (mut snr, mut iters, mut conv) = (0.0, 0, false);
            assert_eq!(riscap_result_summary(res, &mut snr, &mut iters, &mut conv), RiscapStatus::Ok);
            assert!((snr / 16384.0 - 1.0).abs() < 1e-6);

            let mut f = vec![0.0; 8];
            assert_eq!(riscap_result_transmit(res, f.as_mut_ptr(), f.len()), RiscapStatus::Ok);
            let norm: f64 = f.iter().map(|x| x * x).sum();
            assert!((norm - 1.0).abs() < 1e-12);
            let mut small = vec![0.0; 3];
            assert_eq!(riscap_result_phases(res, small.as_mut_ptr(), small.len()), RiscapStatus::BufferTooSmall);
            assert!(last_error().contains("128"));

            let mut len = 0;
            assert_eq!(riscap_result_trace_len(res, &mut len), RiscapStatus::Ok);
            let mut trace = vec![0.0; len];
            assert_eq!(riscap_result_trace(res, trace.as_mut_ptr(), len), RiscapStatus::Ok);
            assert!(trace.windows(2).all(|w| w[1] >= w[0] - 1e-12));
            riscap_result_free(res);
        }
        let mut ub = 0.0;
        assert_eq!(riscap_snr_upper_bound(ch, 1.0, &mut ub), RiscapStatus::Ok);
        let mut cap = 0.0;
        assert_eq!(riscap_capacity(ub, &mut cap), RiscapStatus::Ok);
        assert!((cap - 16385f64.log2()).abs() < 1e-9);
        riscap_channel_free(ch);
        riscap_config_free(cfg);
    }
}

#[test]
fn errors_are_reported_not_raised() {
    unsafe {
        assert_eq!(riscap_config_default(ptr::null_mut()), RiscapStatus::NullPointer);
        assert!(last_error().contains("null"));
        let mut cfg = ptr::null_mut();
        let bad = CString::new("m = 0").unwrap();
        assert_eq!(riscap_config_from_toml(bad.as_ptr(), &mut cfg), RiscapStatus::InvalidArgument);
        let good = CString::new("m = 2\nn = 3\nk1 = inf").unwrap();
        assert_eq!(riscap_config_from_toml(good.as_ptr(), &mut cfg), RiscapStatus::Ok);
        let mut ch = ptr::null_mut();
        assert_eq!(riscap_channel_draw(cfg, 1, 0, &mut ch), RiscapStatus::Ok);
        let mut res = ptr::null_mut();
        assert_eq!(riscap_beamform(ch, 99, 1.0, &mut res), RiscapStatus::InvalidArgument);
        assert_eq!(riscap_beamform(ch, RISCAP_ARCH_MRT, -1.0, &mut res), RiscapStatus::InvalidArgument);
        let mut out = 0.0;
        assert_eq!(riscap_capacity(-1.0, &mut out), RiscapStatus::InvalidArgument);
        riscap_channel_free(ch);
        riscap_config_free(cfg);
        riscap_config_free(ptr::null_mut());
    }
}

#[test]
fn special_functions() {
    assert!((riscap_bessel_i0(1.0) - 1.266_065_877_752_008_4).abs() < 1e-15);
    assert!((riscap_marcum_q1(0.0, 1.0) - (-0.5f64).exp()).abs() < 1e-14);
    assert!(riscap_marcum_q1(-1.0, 1.0).is_nan());
    unsafe {
        let mut v = 0.0;
        assert_eq!(riscap_rician_cdf(1.0, 0.0, 1.0, &mut v), RiscapStatus::Ok);
        assert!((v - (1.0 - (-0.5f64).exp())).abs() < 1e-14);
        assert_eq!(riscap_rician_cdf(1.0, 0.0, 0.0, &mut v), RiscapStatus::InvalidArgument);
    }
}

#[test]
fn outage_and_mgf() {
    unsafe {
        let mut cfg = ptr::null_mut();
        assert_eq!(riscap_config_default(&mut cfg), RiscapStatus::Ok);
        assert_eq!(riscap_config_set_dims(cfg, 2, 4), RiscapStatus::Ok);
        assert_eq!(riscap_config_set_direct_link(cfg, false, 0.0), RiscapStatus::Ok);
        assert_eq!(riscap_config_set_rician_factor(cfg, 5.0), RiscapStatus::Ok);
        let mut ev = ptr::null_mut();
        assert_eq!(riscap_mgf_new(cfg, &mut ev), RiscapStatus::Ok);
        let (mut re, mut im) = (0.0, 0.0);
        assert_eq!(riscap_mgf_evaluate(ev, 0.0, 0.0, &mut re, &mut im), RiscapStatus::Ok);
        assert_eq!((re, im), (1.0, 0.0));
        assert_eq!(riscap_mgf_evaluate(ev, -1.0, 0.0, &mut re, &mut im), RiscapStatus::InvalidArgument);
        let mut p = 0.0;
        assert_eq!(riscap_mgf_cdf(ev, 1e3, &mut p), RiscapStatus::Ok);
        assert!((p - 1.0).abs() < 1e-9);

        let betas = [5.0, 20.0, 40.0, 80.0];
        let mut lb = [0.0; 4];
        let mut mc = [0.0; 4];
        assert_eq!(
            riscap_outage_lower_bound(ev, 1.0, betas.as_ptr(), 4, RISCAP_SCALING_PER_ANTENNA, lb.as_mut_ptr()),
            RiscapStatus::Ok
        );
        assert_eq!(
            riscap_monte_carlo_outage(cfg, RISCAP_ARCH_FA, betas.as_ptr(), 4, 2000, 3, mc.as_mut_ptr()),
            RiscapStatus::Ok
        );
        for i in 0..4 {
            assert!(lb[i] <= mc[i] + 0.05, "{lb:?} {mc:?}");
        }
        assert!(lb.windows(2).all(|w| w[0] <= w[1]));
        let (mut mean, mut se) = (0.0, 0.0);
        assert_eq!(riscap_monte_carlo_capacity(cfg, RISCAP_ARCH_FD, 200, 1, &mut mean, &mut se), RiscapStatus::Ok);
        assert!(mean > 0.0 && se > 0.0);
        riscap_mgf_free(ev);
        riscap_config_free(cfg);
    }
}

/// Compiles a C program against the generated header and the static library.
#[test]
fn c_program_links_against_header() {
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let header_dir = manifest.join("include");
    assert!(header_dir.join("riscap.h").exists());
    let compiler = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    if Command::new(&compiler).arg("--version").output().is_err() {
        eprintln!("no C compiler available; header linkage not exercised");
        return;
    }
    // The test binary sits in target/<profile>/deps; the static library one level up.
    let exe = std::env::current_exe().unwrap();
    let lib_dir = exe.parent().unwrap().parent().unwrap().to_path_buf();
    let staticlib = lib_dir.join("libriscap_ffi.a");
    if !staticlib.exists() {
        eprintln!("static library not built at {}; header linkage not exercised", staticlib.display());
        return;
    }
    let out_dir = tempfile::tempdir().unwrap();
    let bin = out_dir.path().join("smoke");
    let status = Command::new(&compiler)
        .arg(manifest.join("tests/c/smoke.c"))
        .arg("-I")
        .arg(&header_dir)
        .arg(&staticlib)
        .args(["-lm", "-lpthread", "-ldl", "-o"])
        .arg(&bin)
        .status()
        .unwrap();
    assert!(status.success(), "C compilation failed");
    let run = Command::new(&bin).output().unwrap();
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    assert_eq!(String::from_utf8_lossy(&run.stdout).trim(), "snr=1024.000000");
}
