//! C ABI over the camo planners.
//!
//! Instances are opaque heap handles released with [`camo_instance_free`].
//! Every fallible call returns a [`CamoStatus`]; the message for the most
//! recent failure on the calling thread is available from
//! [`camo_last_error`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use camo::bounds::lemma1_gap;
use camo::env::{preset, EnvSpec, RingSpec};
use camo::mdp::{uniform, MdpDocument};
use camo::planners::{AppearanceMetric, AttackMode, BudgetModel, Instance};
use camo::{CamoError, CamouflageScheme, PerceptionDomain};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CamoStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidModel = 3,
    BufferTooSmall = 4,
    LimitExceeded = 5,
    Panic = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CamoMode {
    NoAttack = 0,
    Camouflage = 1,
    StatePerception = 2,
    /// Uses the `budget` and `epsilon` arguments.
    Budgeted = 3,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CamoGapResult {
    /// Shared-argument optimum.
    pub o1: f64,
    /// Sum of independent optima.
    pub o2: f64,
    pub bound: f64,
    pub holds: bool,
}

/// Opaque instance handle.
pub struct CamoInstance {
    inner: Instance,
    recipients: usize,
    metric: AppearanceMetric,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &CamoError) -> CamoStatus {
    match e {
        CamoError::TooManyAttackers { .. } | CamoError::OracleBudget { .. } => CamoStatus::LimitExceeded,
        CamoError::InvalidMdp(_)
        | CamoError::Shape(_)
        | CamoError::NotNormalized { .. }
        | CamoError::InvalidScheme(_)
        | CamoError::Json(_) => CamoStatus::InvalidModel,
        _ => CamoStatus::InvalidArgument,
    }
}

fn guard(f: impl FnOnce() -> Result<(), CamoStatus>) -> CamoStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CamoStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => {
            set_error("internal panic");
            CamoStatus::Panic
        }
    }
}

fn fail(e: CamoError) -> CamoStatus {
    set_error(&e.to_string());
    status_of(&e)
}

fn invalid(msg: &str) -> CamoStatus {
    set_error(msg);
    CamoStatus::InvalidArgument
}

unsafe fn read_str<'a>(p: *const c_char) -> Result<&'a str, CamoStatus> {
    if p.is_null() {
        set_error("null string");
        return Err(CamoStatus::NullPointer);
    }
    CStr::from_ptr(p).to_str().map_err(|_| invalid("string is not UTF-8"))
}

unsafe fn emit(out: *mut *mut CamoInstance, inst: CamoInstance) -> Result<(), CamoStatus> {
    *out = Box::into_raw(Box::new(inst));
    Ok(())
}

fn check_out<T>(out: *mut T) -> Result<(), CamoStatus> {
    if out.is_null() {
        set_error("null output pointer");
        return Err(CamoStatus::NullPointer);
    }
    Ok(())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn camo_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message for the last failed call on this thread; empty when none. Valid
/// until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn camo_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Three-position ring with `recipients` agents and the given horizon.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn camo_instance_ring(
    recipients: usize,
    horizon: usize,
    out: *mut *mut CamoInstance,
) -> CamoStatus {
    guard(|| {
        check_out(out)?;
        if recipients == 0 {
            return Err(invalid("recipients must be positive"));
        }
        let env = EnvSpec::Ring(RingSpec { horizon, ..RingSpec::default() });
        let inner = env.instance(false).map_err(fail)?;
        emit(out, CamoInstance { inner, recipients, metric: env.metric() })
    })
}

/// One of the named presets (`ring-v1`, `chessboard-3x3-v1`,
/// `chessboard-2x2-v1`) at its fixed attacker placement.
///
/// # Safety
/// `name` must be a NUL-terminated string; `out` as in [`camo_instance_ring`].
#[no_mangle]
pub unsafe extern "C" fn camo_instance_preset(name: *const c_char, out: *mut *mut CamoInstance) -> CamoStatus {
    guard(|| {
        check_out(out)?;
        let p = preset(read_str(name)?).map_err(fail)?;
        let inner = p.env.instance(false).map_err(fail)?;
        emit(out, CamoInstance { inner, recipients: p.recipients, metric: p.env.metric() })
    })
}

/// Instance from JSON documents: an MDP and a camouflage scheme. The
/// state-perception domain lets both own state and configuration be distorted
/// and the budget metric is discrete.
///
/// # Safety
/// Both strings must be NUL-terminated; `out` as in [`camo_instance_ring`].
#[no_mangle]
pub unsafe extern "C" fn camo_instance_from_json(
    mdp_json: *const c_char,
    scheme_json: *const c_char,
    recipients: usize,
    out: *mut *mut CamoInstance,
) -> CamoStatus {
    guard(|| {
        check_out(out)?;
        if recipients == 0 {
            return Err(invalid("recipients must be positive"));
        }
        let doc: MdpDocument = serde_json::from_str(read_str(mdp_json)?).map_err(|e| fail(e.into()))?;
        let mdp = doc.into_mdp().map_err(fail)?;
        let validation = camo::mdp::validate_mdp(&mdp);
        if !validation.is_pass() {
            return Err(fail(CamoError::InvalidMdp(validation)));
        }
        let scheme: CamouflageScheme = serde_json::from_str(read_str(scheme_json)?).map_err(|e| fail(e.into()))?;
        let inner = Instance::new(mdp, scheme, PerceptionDomain::free()).map_err(fail)?;
        emit(out, CamoInstance { inner, recipients, metric: AppearanceMetric::Discrete })
    })
}

/// Releases a handle; null is ignored.
///
/// # Safety
/// `inst` must come from a constructor here and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn camo_instance_free(inst: *mut CamoInstance) {
    if !inst.is_null() {
        drop(Box::from_raw(inst));
    }
}

/// Horizon of the instance, 0 for a null handle.
///
/// # Safety
/// `inst` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn camo_instance_horizon(inst: *const CamoInstance) -> usize {
    inst.as_ref().map_or(0, |i| i.inner.mdp.horizon())
}

/// Number of recipients, 0 for a null handle.
///
/// # Safety
/// `inst` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn camo_instance_recipients(inst: *const CamoInstance) -> usize {
    inst.as_ref().map_or(0, |i| i.recipients)
}

/// Plans `mode` and writes the cumulative expected reward trajectory from a
/// uniform start, `horizon + 1` entries, into `out`. `budget` and `epsilon`
/// are read only for [`CamoMode::Budgeted`].
///
/// # Safety
/// `inst` must be a live handle and `out` must point to `out_len` doubles.
#[no_mangle]
pub unsafe extern "C" fn camo_evaluate(
    inst: *const CamoInstance,
    mode: CamoMode,
    budget: f64,
    epsilon: f64,
    out: *mut f64,
    out_len: usize,
) -> CamoStatus {
    guard(|| {
        let inst = inst.as_ref().ok_or_else(|| {
            set_error("null instance");
            CamoStatus::NullPointer
        })?;
        check_out(out)?;
        let need = inst.inner.mdp.horizon() + 1;
        if out_len < need {
            set_error(&format!("need {need} entries, got {out_len}"));
            return Err(CamoStatus::BufferTooSmall);
        }
        let mode = match mode {
            CamoMode::NoAttack => AttackMode::NoAttack,
            CamoMode::Camouflage => AttackMode::Camouflage,
            CamoMode::StatePerception => AttackMode::StatePerception,
            CamoMode::Budgeted => AttackMode::Budgeted(BudgetModel::new(budget, epsilon, inst.metric).map_err(fail)?),
        };
        let init = uniform(&inst.inner.space(inst.recipients));
        let run = inst.inner.run(inst.recipients, &mode, &init).map_err(fail)?;
        ptr::copy_nonoverlapping(run.trajectory.as_ptr(), out, need);
        Ok(())
    })
}

/// Shared-versus-independent minimization gap for `num_functions` functions
/// over a domain of `domain_size` points, row-major in `values`.
///
/// # Safety
/// `values` must point to `num_functions * domain_size` doubles and `out` to
/// one writable [`CamoGapResult`].
#[no_mangle]
pub unsafe extern "C" fn camo_lemma1_gap(
    values: *const f64,
    num_functions: usize,
    domain_size: usize,
    out: *mut CamoGapResult,
) -> CamoStatus {
    guard(|| {
        check_out(out)?;
        if values.is_null() {
            set_error("null values");
            return Err(CamoStatus::NullPointer);
        }
        let len = num_functions.checked_mul(domain_size).ok_or_else(|| invalid("size overflow"))?;
        let flat = std::slice::from_raw_parts(values, len);
        let functions: Vec<Vec<f64>> = flat.chunks(domain_size.max(1)).map(<[f64]>::to_vec).collect();
        let r = lemma1_gap(&functions).map_err(fail)?;
        *out = CamoGapResult { o1: r.o1, o2: r.o2, bound: r.bound, holds: r.holds };
        Ok(())
    })
}
