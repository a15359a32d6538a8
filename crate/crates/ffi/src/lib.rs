//! C ABI for the enso-mmo library.
//!
//! Objects cross the boundary as opaque handles created by `*_new` style
//! functions and released with the matching `*_free`. Every fallible call
//! returns an [`EnsoStatus`]; the message of the last failure on the calling
//! thread is available from [`enso_last_error`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use enso_mmo::integrate::{integrate, IntegratorConfig, Trajectory};
use enso_mmo::manifold::{self, FoldSide};
use enso_mmo::mmo::{self, PeakConfig};
use enso_mmo::model::System;
use enso_mmo::reduced::{self, SingularityKind};
use enso_mmo::{DimensionlessParams, Error, Preset};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnsoStatus {
    Ok = 0,
    NullPointer = 1,
    Validation = 2,
    Numerical = 3,
    BufferTooSmall = 4,
    Panic = 5,
}

/// Dimensionless model parameters.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnsoDimensionless {
    pub delta: f64,
    pub rho: f64,
    pub a: f64,
    pub c: f64,
    pub k: f64,
}

/// Scale factors of a physical parameter set.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnsoScales {
    /// Temperature-difference scale [°C].
    pub s0: f64,
    /// Temperature scale [°C].
    pub t0: f64,
    /// Depth scale [m].
    pub h0: f64,
    /// Time scale [days].
    pub time0: f64,
}

/// Folded singularity of the desingularized reduced flow.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnsoFoldedSingularity {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    /// -1 for L-, +1 for L+.
    pub side: i32,
    /// 0 node, 1 saddle, 2 focus, 3 degenerate.
    pub kind: i32,
    pub mu_s_re: f64,
    pub mu_s_im: f64,
    pub mu_w_re: f64,
    pub mu_w_im: f64,
}

/// Opaque parameter handle.
pub struct EnsoParams {
    inner: DimensionlessParams,
    scales: Option<EnsoScales>,
}

/// Opaque trajectory handle.
pub struct EnsoTrajectory {
    inner: Trajectory<3>,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let text = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).ok());
}

fn fail(err: &Error) -> EnsoStatus {
    set_error(err.to_string());
    match err.exit_code() {
        2 => EnsoStatus::Validation,
        _ => EnsoStatus::Numerical,
    }
}

fn guard(f: impl FnOnce() -> EnsoStatus) -> EnsoStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => {
            set_error("internal panic");
            EnsoStatus::Panic
        }
    }
}

fn null() -> EnsoStatus {
    set_error("null pointer argument");
    EnsoStatus::NullPointer
}

/// Message of the last failure on this thread, or NULL. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn enso_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Creates a handle from a named preset such as "table1" or "fig4".
///
/// # Safety
/// `name` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn enso_params_from_preset(name: *const c_char, out: *mut *mut EnsoParams) -> EnsoStatus {
    guard(|| {
        if name.is_null() || out.is_null() {
            return null();
        }
        let Ok(name) = CStr::from_ptr(name).to_str() else {
            set_error("preset name is not UTF-8");
            return EnsoStatus::Validation;
        };
        let set = match name.parse::<Preset>() {
            Ok(p) => p.params(),
            Err(e) => return fail(&e),
        };
        let inner = match set.dimensionless() {
            Ok(q) => q,
            Err(e) => return fail(&e),
        };
        let scales = match set.scales() {
            Ok(s) => s.map(|s| EnsoScales {
                s0: s.s0,
                t0: s.t0,
                h0: s.h0,
                time0: s.time0,
            }),
            Err(e) => return fail(&e),
        };
        *out = Box::into_raw(Box::new(EnsoParams { inner, scales }));
        EnsoStatus::Ok
    })
}

/// Creates a handle from dimensionless values.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn enso_params_new(values: EnsoDimensionless, out: *mut *mut EnsoParams) -> EnsoStatus {
    guard(|| {
        if out.is_null() {
            return null();
        }
        let q = DimensionlessParams::new(values.delta, values.rho, values.a, values.c, values.k);
        if let Err(e) = q.validate() {
            return fail(&e);
        }
        *out = Box::into_raw(Box::new(EnsoParams { inner: q, scales: None }));
        EnsoStatus::Ok
    })
}

/// Releases a parameter handle. NULL is ignored.
///
/// # Safety
/// `params` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn enso_params_free(params: *mut EnsoParams) {
    if !params.is_null() {
        drop(Box::from_raw(params));
    }
}

/// Copies the dimensionless values out of a handle.
///
/// # Safety
/// Both pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn enso_params_get(params: *const EnsoParams, out: *mut EnsoDimensionless) -> EnsoStatus {
    guard(|| {
        let (Some(p), false) = (params.as_ref(), out.is_null()) else {
            return null();
        };
        let q = p.inner;
        *out = EnsoDimensionless {
            delta: q.delta,
            rho: q.rho,
            a: q.a,
            c: q.c,
            k: q.k,
        };
        EnsoStatus::Ok
    })
}

/// Scale factors of a handle built from a physical preset. Fails with
/// `Validation` for purely dimensionless sets.
///
/// # Safety
/// Both pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn enso_params_scales(params: *const EnsoParams, out: *mut EnsoScales) -> EnsoStatus {
    guard(|| {
        let (Some(p), false) = (params.as_ref(), out.is_null()) else {
            return null();
        };
        match p.scales {
            Some(s) => {
                *out = s;
                EnsoStatus::Ok
            }
            None => {
                set_error("parameter set has no physical scales");
                EnsoStatus::Validation
            }
        }
    })
}

/// Fold offset eta = arccosh(sqrt(c)); the fold curves are x + z = ±eta.
/// Fails with `Validation` when c ≤ 1.
///
/// # Safety
/// Both pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn enso_fold_eta(params: *const EnsoParams, out: *mut f64) -> EnsoStatus {
    guard(|| {
        let (Some(p), false) = (params.as_ref(), out.is_null()) else {
            return null();
        };
        match manifold::fold_curves(&p.inner).filter(|f| !f.is_degenerate()) {
            Some(f) => {
                *out = f.eta;
                EnsoStatus::Ok
            }
            None => {
                set_error(format!("c = {} gives no fold curves", p.inner.c));
                EnsoStatus::Validation
            }
        }
    })
}

/// Writes up to `capacity` folded singularities into `buf` and the total
/// count into `count`. Returns `BufferTooSmall` when `capacity < count`;
/// pass a NULL buffer with zero capacity to query the count.
///
/// # Safety
/// `buf` must hold `capacity` elements; the other pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn enso_folded_singularities(
    params: *const EnsoParams,
    buf: *mut EnsoFoldedSingularity,
    capacity: usize,
    count: *mut usize,
) -> EnsoStatus {
    guard(|| {
        let (Some(p), false) = (params.as_ref(), count.is_null()) else {
            return null();
        };
        if buf.is_null() && capacity > 0 {
            return null();
        }
        let list = reduced::find_folded_singularities(&p.inner);
        *count = list.len();
        for (i, s) in list.iter().take(capacity).enumerate() {
            *buf.add(i) = EnsoFoldedSingularity {
                x: s.x,
                y: s.y,
                z: s.z,
                side: if s.side == FoldSide::Minus { -1 } else { 1 },
                kind: match s.kind {
                    SingularityKind::Node => 0,
                    SingularityKind::Saddle => 1,
                    SingularityKind::Focus => 2,
                    SingularityKind::Degenerate => 3,
                },
                mu_s_re: s.mu_s.re,
                mu_s_im: s.mu_s.im,
                mu_w_re: s.mu_w.re,
                mu_w_im: s.mu_w.im,
            };
        }
        if capacity < list.len() {
            set_error(format!("buffer holds {capacity} of {} singularities", list.len()));
            return EnsoStatus::BufferTooSmall;
        }
        EnsoStatus::Ok
    })
}

/// Integrates the fast system over [t0, t1] from `init` (three values),
/// keeping samples after `t0 + transient`.
///
/// # Safety
/// `init` must point to three doubles; the other pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn enso_simulate(
    params: *const EnsoParams,
    init: *const f64,
    t0: f64,
    t1: f64,
    transient: f64,
    rtol: f64,
    atol: f64,
    out: *mut *mut EnsoTrajectory,
) -> EnsoStatus {
    guard(|| {
        let (Some(p), false, false) = (params.as_ref(), init.is_null(), out.is_null()) else {
            return null();
        };
        let u0 = [*init, *init.add(1), *init.add(2)];
        let q = p.inner;
        let cfg = IntegratorConfig::new(t0, t1)
            .tolerances(rtol, atol)
            .transient(transient)
            .sao_step_cap(q.delta, false);
        match integrate(System::Fast.rhs(q), u0, &cfg, &[]) {
            Ok(inner) => {
                *out = Box::into_raw(Box::new(EnsoTrajectory { inner }));
                EnsoStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}

/// Number of stored samples; 0 for NULL.
///
/// # Safety
/// `traj` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn enso_trajectory_len(traj: *const EnsoTrajectory) -> usize {
    traj.as_ref().map_or(0, |t| t.inner.len())
}

/// Copies sample `index` into `time` and `state` (three doubles).
///
/// # Safety
/// `state` must hold three doubles; the other pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn enso_trajectory_sample(
    traj: *const EnsoTrajectory,
    index: usize,
    time: *mut f64,
    state: *mut f64,
) -> EnsoStatus {
    guard(|| {
        let (Some(t), false, false) = (traj.as_ref(), time.is_null(), state.is_null()) else {
            return null();
        };
        if index >= t.inner.len() {
            set_error(format!("sample {index} out of range (len {})", t.inner.len()));
            return EnsoStatus::Validation;
        }
        *time = t.inner.times[index];
        let s = t.inner.states[index];
        for (i, v) in s.iter().enumerate() {
            *state.add(i) = *v;
        }
        EnsoStatus::Ok
    })
}

/// Writes the MMO signature (for example "1^5 1^5") as a NUL-terminated
/// string. `written` receives the length without the terminator; on
/// `BufferTooSmall` it holds the required length.
///
/// # Safety
/// `buf` must hold `capacity` bytes; `written` must be valid.
#[no_mangle]
pub unsafe extern "C" fn enso_trajectory_signature(
    traj: *const EnsoTrajectory,
    buf: *mut c_char,
    capacity: usize,
    written: *mut usize,
) -> EnsoStatus {
    guard(|| {
        let (Some(t), false) = (traj.as_ref(), written.is_null()) else {
            return null();
        };
        let text = mmo::signature(&t.inner, &PeakConfig::default()).render();
        *written = text.len();
        if buf.is_null() || capacity <= text.len() {
            set_error(format!("signature needs {} bytes", text.len() + 1));
            return EnsoStatus::BufferTooSmall;
        }
        ptr::copy_nonoverlapping(text.as_ptr(), buf.cast::<u8>(), text.len());
        *buf.add(text.len()) = 0;
        EnsoStatus::Ok
    })
}

/// Releases a trajectory handle. NULL is ignored.
///
/// # Safety
/// `traj` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn enso_trajectory_free(traj: *mut EnsoTrajectory) {
    if !traj.is_null() {
        drop(Box::from_raw(traj));
    }
}
