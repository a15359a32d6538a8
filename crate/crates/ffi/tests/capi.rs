use std::ffi::{CStr, CString};
use std::ptr;

use enso_mmo_ffi::*;

fn preset(name: &str) -> *mut EnsoParams {
    let name = CString::new(name).unwrap();
    let mut out = ptr::null_mut();
    assert_eq!(
        unsafe { enso_params_from_preset(name.as_ptr(), &mut out) },
        EnsoStatus::Ok
    );
    assert!(!out.is_null());
    out
}

fn last_error() -> String {
    let p = enso_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn table1_preset_exposes_dimensionless_values_and_scales() {
    let p = preset("table1");
    let mut q = EnsoDimensionless {
        delta: 0.0,
        rho: 0.0,
        a: 0.0,
        c: 0.0,
        k: 0.0,
    };
    let mut s = EnsoScales {
        s0: 0.0,
        t0: 0.0,
        h0: 0.0,
        time0: 0.0,
    };
    unsafe {
        assert_eq!(enso_params_get(p, &mut q), EnsoStatus::Ok);
        assert_eq!(enso_params_scales(p, &mut s), EnsoStatus::Ok);
        enso_params_free(p);
    }
    assert!((q.delta - 0.2625).abs() < 1e-3);
    assert!((q.a - 6.8927).abs() < 1e-3);
    assert!((s.h0 - 62.0).abs() < 1e-9);
    assert!((s.time0 - 104.9819).abs() < 1e-3);
}

#[test]
fn unknown_preset_is_a_validation_error() {
    let name = CString::new("nope").unwrap();
    let mut out = ptr::null_mut();
    let st = unsafe { enso_params_from_preset(name.as_ptr(), &mut out) };
    assert_eq!(st, EnsoStatus::Validation);
    assert!(out.is_null());
    assert!(last_error().contains("unknown preset"));
}

#[test]
fn null_arguments_are_reported() {
    let mut out = ptr::null_mut();
    assert_eq!(
        unsafe { enso_params_from_preset(ptr::null(), &mut out) },
        EnsoStatus::NullPointer
    );
    assert_eq!(
        unsafe { enso_fold_eta(ptr::null(), ptr::null_mut()) },
        EnsoStatus::NullPointer
    );
    assert_eq!(unsafe { enso_trajectory_len(ptr::null()) }, 0);
    unsafe {
        enso_params_free(ptr::null_mut());
        enso_trajectory_free(ptr::null_mut());
    }
}

#[test]
fn invalid_dimensionless_values_are_rejected() {
    let mut out = ptr::null_mut();
    let v = EnsoDimensionless {
        delta: -1.0,
        rho: 0.5,
        a: 2.55,
        c: 3.75,
        k: 0.34,
    };
    assert_eq!(unsafe { enso_params_new(v, &mut out) }, EnsoStatus::Validation);
    assert!(out.is_null());
}

#[test]
fn fold_eta_and_the_no_fold_case() {
    let mut out = ptr::null_mut();
    let mut eta = 0.0;
    let v = EnsoDimensionless {
        delta: 0.1,
        rho: 0.5,
        a: 2.55,
        c: 3.75,
        k: 0.34,
    };
    unsafe {
        assert_eq!(enso_params_new(v, &mut out), EnsoStatus::Ok);
        assert_eq!(enso_fold_eta(out, &mut eta), EnsoStatus::Ok);
        enso_params_free(out);
    }
    assert!((eta - 3.75f64.sqrt().acosh()).abs() < 1e-14);

    let v = EnsoDimensionless { c: 1.0, ..v };
    unsafe {
        assert_eq!(enso_params_new(v, &mut out), EnsoStatus::Ok);
        assert_eq!(enso_fold_eta(out, &mut eta), EnsoStatus::Validation);
        enso_params_free(out);
    }
    assert!(last_error().contains("no fold"));
}

#[test]
fn folded_singularities_use_a_count_query() {
    let p = preset("fig4");
    let mut count = 0usize;
    unsafe {
        assert_eq!(
            enso_folded_singularities(p, ptr::null_mut(), 0, &mut count),
            EnsoStatus::BufferTooSmall
        );
    }
    assert!(count >= 1);
    let mut buf = vec![
        EnsoFoldedSingularity {
            x: 0.0,
            y: 0.0,
            z: 0.0,
            side: 0,
            kind: -1,
            mu_s_re: 0.0,
            mu_s_im: 0.0,
            mu_w_re: 0.0,
            mu_w_im: 0.0,
        };
        count
    ];
    unsafe {
        assert_eq!(
            enso_folded_singularities(p, buf.as_mut_ptr(), buf.len(), &mut count),
            EnsoStatus::Ok
        );
        enso_params_free(p);
    }
    let node = buf
        .iter()
        .find(|s| s.side == -1 && s.kind == 0)
        .expect("folded node on L-");
    assert!((node.mu_s_re - -3.48).abs() < 0.05);
    assert!((node.mu_w_re - -0.13).abs() < 0.05);
}

#[test]
fn simulate_and_read_back_a_signature() {
    let p = preset("fig7");
    let init = [-4.0, -1.0, 0.5];
    let mut traj = ptr::null_mut();
    unsafe {
        assert_eq!(
            enso_simulate(p, init.as_ptr(), 0.0, 400.0, 120.0, 1e-8, 1e-10, &mut traj),
            EnsoStatus::Ok
        );
        enso_params_free(p);
    }
    let n = unsafe { enso_trajectory_len(traj) };
    assert!(n > 100);
    let mut t = 0.0;
    let mut s = [0.0; 3];
    unsafe {
        assert_eq!(enso_trajectory_sample(traj, 0, &mut t, s.as_mut_ptr()), EnsoStatus::Ok);
        assert_eq!(
            enso_trajectory_sample(traj, n, &mut t, s.as_mut_ptr()),
            EnsoStatus::Validation
        );
    }
    assert!(t >= 120.0);

    let mut written = 0usize;
    let mut small = [0 as std::ffi::c_char; 2];
    unsafe {
        assert_eq!(
            enso_trajectory_signature(traj, small.as_mut_ptr(), small.len(), &mut written),
            EnsoStatus::BufferTooSmall
        );
    }
    let mut buf = vec![0 as std::ffi::c_char; written + 1];
    unsafe {
        assert_eq!(
            enso_trajectory_signature(traj, buf.as_mut_ptr(), buf.len(), &mut written),
            EnsoStatus::Ok
        );
        enso_trajectory_free(traj);
    }
    let sig = unsafe { CStr::from_ptr(buf.as_ptr()) }.to_str().unwrap().to_owned();
    assert_eq!(sig.len(), written);
    assert!(sig.starts_with("1^5"), "{sig}");
}

#[test]
fn generated_header_declares_the_api() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/enso_mmo.h")).unwrap();
    for name in [
        "enso_last_error",
        "enso_params_from_preset",
        "enso_params_new",
        "enso_params_free",
        "enso_fold_eta",
        "enso_folded_singularities",
        "enso_simulate",
        "enso_trajectory_sample",
        "enso_trajectory_signature",
        "enso_trajectory_free",
        "ENSO_STATUS_VALIDATION",
        "typedef struct EnsoParams EnsoParams",
    ] {
        assert!(header.contains(name), "{name} missing from header");
    }
}
