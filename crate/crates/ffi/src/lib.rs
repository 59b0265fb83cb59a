//! C ABI over the modid toolkit.
//!
//! Conventions:
//! - every function returns a [`ModidStatus`] code; `MODID_OK` (0) is success;
//! - objects are opaque handles created by `*_new`/`*_load` functions and
//!   released by the matching `*_free` (freeing a null pointer is a no-op);
//! - output buffers are caller-allocated; lengths are always passed
//!   explicitly and validated;
//! - on failure, a thread-local message is readable through
//!   [`modid_last_error_message`];
//! - panics never unwind across the boundary; they surface as
//!   `MODID_ERR_PANIC`.
//!
//! The installed header `include/modid.h` mirrors this surface; the
//! `header_lists_every_export` test keeps the two in sync.

use std::cell::RefCell;
use std::ffi::CStr;
use std::os::raw::{c_char, c_int};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use modid::error::Error;
use modid::experiment::Checkpoint;
use modid::hill::{HillFunction, HillKind};
use modid::recovery::{self, ProbeMeasurements, RecoveredSystem};
use modid::rre::{steady_state, RreParameters, SteadyStateMethod, SteadyStateOptions};
use modid::train::{ModularModel, MonolithicModel, Predict};
use modid::ResourceCompositionMap;

/// Status codes. Stable values; additions only.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModidStatus {
    Ok = 0,
    InvalidParameter = 1,
    InvalidArchitecture = 2,
    Shape = 3,
    Domain = 4,
    State = 5,
    DegenerateProbes = 6,
    Singular = 7,
    InvalidPair = 8,
    Convergence = 9,
    InvalidConfig = 10,
    Io = 11,
    Json = 12,
    NullPointer = 13,
    Utf8 = 14,
    Panic = 15,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: impl Into<String>) {
    LAST_ERROR.with(|slot| *slot.borrow_mut() = msg.into());
}

fn status_of(err: &Error) -> ModidStatus {
    match err {
        Error::InvalidParameter(_) => ModidStatus::InvalidParameter,
        Error::InvalidArchitecture(_) => ModidStatus::InvalidArchitecture,
        Error::Shape(_) => ModidStatus::Shape,
        Error::Domain(_) => ModidStatus::Domain,
        Error::State(_) => ModidStatus::State,
        Error::DegenerateProbes { .. } => ModidStatus::DegenerateProbes,
        Error::Singular(_) => ModidStatus::Singular,
        Error::InvalidPair(_) => ModidStatus::InvalidPair,
        Error::Convergence(_) => ModidStatus::Convergence,
        Error::InvalidConfig(_) => ModidStatus::InvalidConfig,
        Error::Io(_) => ModidStatus::Io,
        Error::Json(_) => ModidStatus::Json,
    }
}

fn fail(err: Error) -> ModidStatus {
    let code = status_of(&err);
    set_error(err.to_string());
    code
}

fn guard<F: FnOnce() -> ModidStatus>(body: F) -> ModidStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(code) => code,
        Err(_) => {
            set_error("panic inside modid");
            ModidStatus::Panic
        }
    }
}

fn null_fail(what: &str) -> ModidStatus {
    set_error(format!("{what} is null"));
    ModidStatus::NullPointer
}

/// Copy the last error message of this thread into `buf` (truncated,
/// NUL-terminated). Returns the full message length in bytes.
///
/// # Safety
/// `buf` must point to `cap` writable bytes, or be null (query mode).
#[no_mangle]
pub unsafe extern "C" fn modid_last_error_message(buf: *mut c_char, cap: usize) -> usize {
    LAST_ERROR.with(|slot| {
        let msg = slot.borrow();
        let bytes = msg.as_bytes();
        if !buf.is_null() && cap > 0 {
            let n = bytes.len().min(cap - 1);
            std::ptr::copy_nonoverlapping(bytes.as_ptr(), buf.cast(), n);
            *buf.add(n) = 0;
        }
        bytes.len()
    })
}

/// Copy the crate version into `buf` (truncated, NUL-terminated). Returns the
/// full length.
///
/// # Safety
/// `buf` must point to `cap` writable bytes, or be null (query mode).
#[no_mangle]
pub unsafe extern "C" fn modid_version(buf: *mut c_char, cap: usize) -> usize {
    let version = env!("CARGO_PKG_VERSION").as_bytes();
    if !buf.is_null() && cap > 0 {
        let n = version.len().min(cap - 1);
        std::ptr::copy_nonoverlapping(version.as_ptr(), buf.cast(), n);
        *buf.add(n) = 0;
    }
    version.len()
}

unsafe fn str_arg<'a>(ptr: *const c_char, what: &str) -> Result<&'a str, ModidStatus> {
    if ptr.is_null() {
        return Err(null_fail(what));
    }
    CStr::from_ptr(ptr).to_str().map_err(|_| {
        set_error(format!("{what} is not valid UTF-8"));
        ModidStatus::Utf8
    })
}

// ---------------------------------------------------------------------------
// Hill functions
// ---------------------------------------------------------------------------

pub struct ModidHill(HillFunction);

/// Create a Hill function. `kind` is 0 for activating, 1 for repressing.
///
/// # Safety
/// `out` must be a valid pointer to a handle slot.
#[no_mangle]
pub unsafe extern "C" fn modid_hill_new(
    kind: c_int,
    amplitude: f64,
    half_point: f64,
    coefficient: f64,
    basal: f64,
    out: *mut *mut ModidHill,
) -> ModidStatus {
    guard(|| {
        if out.is_null() {
            return null_fail("out");
        }
        let kind = match kind {
            0 => HillKind::Activating,
            1 => HillKind::Repressing,
            other => {
                set_error(format!("kind must be 0 or 1, got {other}"));
                return ModidStatus::InvalidParameter;
            }
        };
        match HillFunction::new(kind, amplitude, half_point, coefficient, basal) {
            Ok(h) => {
                *out = Box::into_raw(Box::new(ModidHill(h)));
                ModidStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Evaluate a Hill function at `u`.
///
/// # Safety
/// `hill` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn modid_hill_eval(
    hill: *const ModidHill,
    u: f64,
    out: *mut f64,
) -> ModidStatus {
    guard(|| {
        if hill.is_null() {
            return null_fail("hill");
        }
        if out.is_null() {
            return null_fail("out");
        }
        *out = (*hill).0.eval(u);
        ModidStatus::Ok
    })
}

/// # Safety
/// `hill` must be a handle from `modid_hill_new` (or null).
#[no_mangle]
pub unsafe extern "C" fn modid_hill_free(hill: *mut ModidHill) {
    if !hill.is_null() {
        drop(Box::from_raw(hill));
    }
}

// ---------------------------------------------------------------------------
// Composition map
// ---------------------------------------------------------------------------

pub struct ModidMap(ResourceCompositionMap);

/// Create a composition map from `n` positive parameters.
///
/// # Safety
/// `theta` must point to `n` doubles; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn modid_map_new(
    theta: *const f64,
    n: usize,
    out: *mut *mut ModidMap,
) -> ModidStatus {
    guard(|| {
        if theta.is_null() {
            return null_fail("theta");
        }
        if out.is_null() {
            return null_fail("out");
        }
        let theta = std::slice::from_raw_parts(theta, n).to_vec();
        match ResourceCompositionMap::new(theta) {
            Ok(map) => {
                *out = Box::into_raw(Box::new(ModidMap(map)));
                ModidStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Evaluate the map on `n` nonnegative module outputs, writing `n` components.
///
/// # Safety
/// `y` and `out` must point to `n` doubles each; `map` must be live.
#[no_mangle]
pub unsafe extern "C" fn modid_map_eval(
    map: *const ModidMap,
    y: *const f64,
    n: usize,
    out: *mut f64,
) -> ModidStatus {
    guard(|| {
        if map.is_null() {
            return null_fail("map");
        }
        if y.is_null() {
            return null_fail("y");
        }
        if out.is_null() {
            return null_fail("out");
        }
        let y = std::slice::from_raw_parts(y, n);
        let out = std::slice::from_raw_parts_mut(out, n);
        match (*map).0.eval_into(y, out) {
            Ok(()) => ModidStatus::Ok,
            Err(e) => fail(e),
        }
    })
}

/// # Safety
/// `map` must be a handle from `modid_map_new` (or null).
#[no_mangle]
pub unsafe extern "C" fn modid_map_free(map: *mut ModidMap) {
    if !map.is_null() {
        drop(Box::from_raw(map));
    }
}

// ---------------------------------------------------------------------------
// Trained models
// ---------------------------------------------------------------------------

enum ModelInner {
    Modular(ModularModel),
    Monolithic(MonolithicModel),
}

pub struct ModidModel(ModelInner);

/// Load a trained model from a checkpoint JSON written by the trainer.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn modid_model_load(
    path: *const c_char,
    out: *mut *mut ModidModel,
) -> ModidStatus {
    guard(|| {
        if out.is_null() {
            return null_fail("out");
        }
        let path = match str_arg(path, "path") {
            Ok(s) => s,
            Err(code) => return code,
        };
        let ckpt = match Checkpoint::load(Path::new(path)) {
            Ok(c) => c,
            Err(e) => return fail(e),
        };
        let inner = if ckpt.model == "modular" {
            match ckpt.into_modular() {
                Ok(m) => ModelInner::Modular(m),
                Err(e) => return fail(e),
            }
        } else {
            match ckpt.into_monolithic() {
                Ok(m) => ModelInner::Monolithic(m),
                Err(e) => return fail(e),
            }
        };
        *out = Box::into_raw(Box::new(ModidModel(inner)));
        ModidStatus::Ok
    })
}

/// Input width of a loaded model.
///
/// # Safety
/// `model` must be live; `out` valid.
#[no_mangle]
pub unsafe extern "C" fn modid_model_input_dim(
    model: *const ModidModel,
    out: *mut usize,
) -> ModidStatus {
    guard(|| {
        if model.is_null() {
            return null_fail("model");
        }
        if out.is_null() {
            return null_fail("out");
        }
        *out = match &(*model).0 {
            ModelInner::Modular(m) => m.input_dim(),
            ModelInner::Monolithic(m) => m.input_dim(),
        };
        ModidStatus::Ok
    })
}

/// Predict the composed outputs for one input vector.
///
/// # Safety
/// `u` must point to `n_in` doubles and `out` to `n_out` doubles; `model`
/// must be live.
#[no_mangle]
pub unsafe extern "C" fn modid_model_predict(
    model: *const ModidModel,
    u: *const f64,
    n_in: usize,
    out: *mut f64,
    n_out: usize,
) -> ModidStatus {
    guard(|| {
        if model.is_null() {
            return null_fail("model");
        }
        if u.is_null() {
            return null_fail("u");
        }
        if out.is_null() {
            return null_fail("out");
        }
        let u = std::slice::from_raw_parts(u, n_in);
        let result = match &(*model).0 {
            ModelInner::Modular(m) => m.predict(u),
            ModelInner::Monolithic(m) => m.predict(u),
        };
        match result {
            Ok(pred) => {
                if pred.len() != n_out {
                    set_error(format!(
                        "model emits {} outputs, caller expects {n_out}",
                        pred.len()
                    ));
                    return ModidStatus::Shape;
                }
                std::slice::from_raw_parts_mut(out, n_out).copy_from_slice(&pred);
                ModidStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// # Safety
/// `model` must be a handle from `modid_model_load` (or null).
#[no_mangle]
pub unsafe extern "C" fn modid_model_free(model: *mut ModidModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

// ---------------------------------------------------------------------------
// Closed-form identification
// ---------------------------------------------------------------------------

/// Measurement map: from `theta[2]`, `f1[3]`, `f2[3]` (values at the two
/// probes and the anchor) to the eight composed outputs.
///
/// # Safety
/// All pointers must reference buffers of the stated lengths.
#[no_mangle]
pub unsafe extern "C" fn modid_forward_map(
    theta: *const f64,
    f1: *const f64,
    f2: *const f64,
    g_out: *mut f64,
) -> ModidStatus {
    guard(|| {
        if theta.is_null() || f1.is_null() || f2.is_null() {
            return null_fail("theta/f1/f2");
        }
        if g_out.is_null() {
            return null_fail("g_out");
        }
        let x = RecoveredSystem {
            theta: [*theta, *theta.add(1)],
            f1_at: [*f1, *f1.add(1), *f1.add(2)],
            f2_at: [*f2, *f2.add(1), *f2.add(2)],
        };
        match recovery::forward_map(&x) {
            Ok(g) => {
                std::slice::from_raw_parts_mut(g_out, 8).copy_from_slice(&g);
                ModidStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Invert eight probe measurements. `probes` holds `u1_a, u1_b, u2_a, u2_b`;
/// `g` the eight measurements in the `forward_map` order. Outputs land in
/// `theta_out[2]`, `f1_out[3]`, `f2_out[3]`.
///
/// # Safety
/// All pointers must reference buffers of the stated lengths.
#[no_mangle]
pub unsafe extern "C" fn modid_recover(
    probes: *const f64,
    g: *const f64,
    theta_out: *mut f64,
    f1_out: *mut f64,
    f2_out: *mut f64,
) -> ModidStatus {
    guard(|| {
        if probes.is_null() || g.is_null() {
            return null_fail("probes/g");
        }
        if theta_out.is_null() || f1_out.is_null() || f2_out.is_null() {
            return null_fail("theta_out/f1_out/f2_out");
        }
        let p = std::slice::from_raw_parts(probes, 4);
        let g = std::slice::from_raw_parts(g, 8);
        let m = ProbeMeasurements {
            probes: [[p[0], p[1]], [p[2], p[3]]],
            g_values: [g[0], g[1], g[2], g[3], g[4], g[5], g[6], g[7]],
        };
        match recovery::recover(&m) {
            Ok(rec) => {
                std::slice::from_raw_parts_mut(theta_out, 2).copy_from_slice(&rec.theta);
                std::slice::from_raw_parts_mut(f1_out, 3).copy_from_slice(&rec.f1_at);
                std::slice::from_raw_parts_mut(f2_out, 3).copy_from_slice(&rec.f2_at);
                ModidStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Pointwise aliasing transform: the module value that reproduces the same
/// composed output once the composition parameter is `theta_hat` instead of
/// `theta`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn modid_counterexample_transform(
    theta: f64,
    theta_hat: f64,
    f_value: f64,
    out: *mut f64,
) -> ModidStatus {
    guard(|| {
        if out.is_null() {
            return null_fail("out");
        }
        if !(theta > 0.0) || !(theta_hat > 0.0) {
            set_error("theta and theta_hat must be positive");
            return ModidStatus::InvalidParameter;
        }
        *out = recovery::counterexample_transform(theta, theta_hat, f_value);
        ModidStatus::Ok
    })
}

// ---------------------------------------------------------------------------
// Mass-action model
// ---------------------------------------------------------------------------

pub struct ModidRre(RreParameters);

/// Built-in single-module parameter set.
///
/// # Safety
/// `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn modid_rre_default_single(out: *mut *mut ModidRre) -> ModidStatus {
    guard(|| {
        if out.is_null() {
            return null_fail("out");
        }
        *out = Box::into_raw(Box::new(ModidRre(RreParameters::default_single())));
        ModidStatus::Ok
    })
}

/// Load mass-action parameters from JSON.
///
/// # Safety
/// `path` must be NUL-terminated; `out` valid.
#[no_mangle]
pub unsafe extern "C" fn modid_rre_load(
    path: *const c_char,
    out: *mut *mut ModidRre,
) -> ModidStatus {
    guard(|| {
        if out.is_null() {
            return null_fail("out");
        }
        let path = match str_arg(path, "path") {
            Ok(s) => s,
            Err(code) => return code,
        };
        let params: RreParameters = match modid::io::load_json(Path::new(path)) {
            Ok(p) => p,
            Err(e) => return fail(e),
        };
        if let Err(e) = params.validate() {
            return fail(e);
        }
        *out = Box::into_raw(Box::new(ModidRre(params)));
        ModidStatus::Ok
    })
}

/// Number of modules in a parameter set.
///
/// # Safety
/// `params` must be live; `out` valid.
#[no_mangle]
pub unsafe extern "C" fn modid_rre_n_modules(
    params: *const ModidRre,
    out: *mut usize,
) -> ModidStatus {
    guard(|| {
        if params.is_null() {
            return null_fail("params");
        }
        if out.is_null() {
            return null_fail("out");
        }
        *out = (*params).0.n_modules();
        ModidStatus::Ok
    })
}

/// Steady-state module protein outputs at inputs `u`. `method` is 0 for the
/// explicit integrator, 1 for damped root finding.
///
/// # Safety
/// `u` must hold `n` doubles and `y_out` `n` doubles; `params` must be live.
#[no_mangle]
pub unsafe extern "C" fn modid_rre_steady_state(
    params: *const ModidRre,
    u: *const f64,
    n: usize,
    method: c_int,
    y_out: *mut f64,
) -> ModidStatus {
    guard(|| {
        if params.is_null() {
            return null_fail("params");
        }
        if u.is_null() {
            return null_fail("u");
        }
        if y_out.is_null() {
            return null_fail("y_out");
        }
        let method = match method {
            0 => SteadyStateMethod::Integrate,
            1 => SteadyStateMethod::Newton,
            other => {
                set_error(format!("method must be 0 or 1, got {other}"));
                return ModidStatus::InvalidParameter;
            }
        };
        let u = std::slice::from_raw_parts(u, n);
        let opts = SteadyStateOptions::default();
        match steady_state(&(*params).0, u, method, &opts) {
            Ok(state) => {
                let outputs = state.outputs();
                if outputs.len() != n {
                    set_error(format!(
                        "parameter set has {} modules, caller passed {n}",
                        outputs.len()
                    ));
                    return ModidStatus::Shape;
                }
                std::slice::from_raw_parts_mut(y_out, n).copy_from_slice(&outputs);
                ModidStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// # Safety
/// `params` must be a handle from a `modid_rre_*` constructor (or null).
#[no_mangle]
pub unsafe extern "C" fn modid_rre_free(params: *mut ModidRre) {
    if !params.is_null() {
        drop(Box::from_raw(params));
    }
}

#[cfg(test)]
mod tests {
    /// Every exported symbol must be declared in the installed header.
    #[test]
    fn header_lists_every_export() {
        let header = include_str!("../include/modid.h");
        let source = include_str!("lib.rs");
        let mut exports = Vec::new();
        let mut pending = false;
        for line in source.lines() {
            if line.contains("#[no_mangle]") {
                pending = true;
                continue;
            }
            if pending {
                if let Some(rest) = line.trim().strip_prefix("pub unsafe extern \"C\" fn ") {
                    let name: String = rest
                        .chars()
                        .take_while(|c| c.is_alphanumeric() || *c == '_')
                        .collect();
                    exports.push(name);
                    pending = false;
                }
            }
        }
        assert!(exports.len() >= 15, "expected a real surface, found {exports:?}");
        for name in exports {
            assert!(
                header.contains(&name),
                "exported function {name} missing from include/modid.h"
            );
        }
    }
}
