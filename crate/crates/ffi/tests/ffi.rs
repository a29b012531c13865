use std::ffi::{CStr, CString};
use std::process::Command;
use std::ptr;

use hermite_bmo_ffi::*;

fn last_error() -> String {
    let p = hb_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn scalar_entry_points() {
    let mut v = 0.0;
    let x = [0.0];
    let st = unsafe { hb_heat_kernel(0.5, 1, x.as_ptr(), x.as_ptr(), &mut v) };
    assert_eq!(st, HbStatus::Ok);
    assert!((v - (3.0 / (8.0 * std::f64::consts::PI)).sqrt()).abs() < 1e-15);

    let st = unsafe { hb_heat_kernel(1.5, 1, x.as_ptr(), x.as_ptr(), &mut v) };
    assert_eq!(st, HbStatus::Domain);
    assert!(last_error().contains("domain"));

    let st = unsafe { hb_riesz_kernel(0, 1, x.as_ptr(), x.as_ptr(), &mut v) };
    assert_eq!(st, HbStatus::SingularPoint);

    let p = [2.0];
    assert_eq!(unsafe { hb_critical_radius(1, p.as_ptr(), &mut v) }, HbStatus::Ok);
    assert!((v - 1.0 / 3.0).abs() < 1e-15);

    let orbit = [0.0, 1.0, 0.0];
    assert_eq!(unsafe { hb_variation(orbit.as_ptr(), 3, 3.0, &mut v) }, HbStatus::Ok);
    assert!((v - 2f64.powf(1.0 / 3.0)).abs() < 1e-15);
    assert_eq!(
        unsafe { hb_variation(orbit.as_ptr(), 3, 3.0, ptr::null_mut()) },
        HbStatus::NullPointer
    );
}

#[test]
fn grid_handles() {
    let m = 401;
    let l = 6.0;
    let h = 2.0 * l / (m - 1) as f64;
    let samples: Vec<f64> = (0..m).map(|i| (-0.5 * (-l + i as f64 * h).powi(2)).exp()).collect();
    let mut f = ptr::null_mut();
    assert_eq!(unsafe { hb_grid_function_new(1, l, m, samples.as_ptr(), m, &mut f) }, HbStatus::Ok);
    assert_eq!(unsafe { hb_grid_function_len(f) }, m);

    // h_0 is an eigenfunction: W_t h_0 = e^{-t} h_0, P_t h_0 = e^{-t} h_0
    let mut g = ptr::null_mut();
    assert_eq!(unsafe { hb_apply_poisson(f, 0.5, &mut g) }, HbStatus::Ok);
    let mut out = vec![0.0; m];
    assert_eq!(unsafe { hb_grid_function_samples(g, out.as_mut_ptr(), m) }, HbStatus::Ok);
    assert!((out[m / 2] - (-0.5f64).exp()).abs() < 1e-8);
    assert_eq!(
        unsafe { hb_grid_function_samples(g, out.as_mut_ptr(), m - 1) },
        HbStatus::RejectedInput
    );

    let mut r = ptr::null_mut();
    assert_eq!(unsafe { hb_riesz_transform(f, 0, &mut r) }, HbStatus::Ok);
    assert_eq!(unsafe { hb_riesz_transform(f, 3, &mut ptr::null_mut()) }, HbStatus::RejectedInput);

    let mut est = HbBmoEstimate::default();
    assert_eq!(unsafe { hb_bmo_h_norm(f, 1e-8, &mut est) }, HbStatus::Ok);
    assert!(est.norm.is_finite() && est.norm > 0.0 && est.balls > 0);

    let mut bad = ptr::null_mut();
    assert_eq!(
        unsafe { hb_grid_function_new(1, l, m, samples.as_ptr(), m - 1, &mut bad) },
        HbStatus::RejectedInput
    );
    assert!(bad.is_null());
    assert_eq!(unsafe { hb_apply_heat(ptr::null(), 0.5, &mut bad) }, HbStatus::NullPointer);

    unsafe {
        hb_grid_function_free(r);
        hb_grid_function_free(g);
        hb_grid_function_free(f);
        hb_grid_function_free(ptr::null_mut());
    }
}

#[test]
fn verify_json_round_trip() {
    let cfg = CString::new(r#"{"operators": ["riesz(1)"], "sweep": {"half_width": 2, "points": 16}, "checks": {"t1": false}}"#).unwrap();
    let mut out = ptr::null_mut();
    let mut passed = false;
    assert_eq!(unsafe { hb_verify_json(cfg.as_ptr(), &mut out, &mut passed) }, HbStatus::Ok);
    let text = unsafe { CStr::from_ptr(out) }.to_str().unwrap().to_owned();
    unsafe { hb_string_free(out) };
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["lines"][0]["subject"], "riesz(1)");
    assert_eq!(v["lines"][0]["passed"], passed);

    let bad = CString::new(r#"{"n": 9}"#).unwrap();
    assert_eq!(unsafe { hb_verify_json(bad.as_ptr(), &mut out, &mut passed) }, HbStatus::Config);
    assert!(last_error().contains("field `n`"));
    let invalid = [0xffu8 as std::ffi::c_char, 0];
    assert_eq!(
        unsafe { hb_verify_json(invalid.as_ptr(), &mut out, &mut passed) },
        HbStatus::InvalidUtf8
    );
}

#[test]
fn header_declares_the_interface() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/hermite_bmo.h")).unwrap();
    for name in [
        "typedef struct HbGridFunction HbGridFunction;",
        "HB_STATUS_PANIC = 12",
        "hb_verify_json",
        "hb_string_free",
        "hb_bmo_h_norm",
    ] {
        assert!(header.contains(name), "missing {name}");
    }
}

/// Builds the C example against the static library and the header.
#[test]
fn c_program_links_and_runs() {
    let deps = std::env::current_exe().unwrap();
    let target = deps.parent().unwrap().parent().unwrap();
    let lib = target.join("libhermite_bmo_ffi.a");
    assert!(lib.exists(), "static library not built at {}", lib.display());
    let manifest = env!("CARGO_MANIFEST_DIR");
    let dir = tempfile::tempdir().unwrap();
    let exe = dir.path().join("smoke");
    let status = Command::new(std::env::var("CC").unwrap_or_else(|_| "cc".into()))
        .args(["-std=c99", "-D_DEFAULT_SOURCE", "-Wall", "-Werror", "-I"])
        .arg(format!("{manifest}/include"))
        .arg(format!("{manifest}/examples/smoke.c"))
        .arg(&lib)
        .args(["-lm", "-lpthread", "-ldl", "-o"])
        .arg(&exe)
        .status()
        .unwrap();
    assert!(status.success());
    let out = Command::new(&exe).output().unwrap();
    assert!(
        out.status.success(),
        "exit {:?}: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("ok "));
}
