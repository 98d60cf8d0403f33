//! C ABI for trained fractional reduced-basis models.
//!
//! The surface is intentionally small: load a model container produced by
//! the `fracrb` trainer, query its dimensions, run online evaluations, and
//! (when the container carries stability data) evaluate certified error
//! bounds. Handles are opaque, functions return status codes, and every
//! entry point catches panics at the boundary.

#![allow(clippy::missing_safety_doc)]

use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use fracrb::certify;
use fracrb::error::Error;
use fracrb::fem::{SolverOptions, TruthProblem};
use fracrb::model_io::{load_bundle, ModelBundle};
use fracrb::param::Parameter;
use fracrb::sparse::Csr;

/// Status codes returned by every fallible function.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FracrbStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    IoError = 3,
    BadFormat = 4,
    OutOfDomain = 5,
    BufferTooSmall = 6,
    NumericalFailure = 7,
    NoCertification = 8,
    InvalidArgument = 9,
    Panic = 99,
}

fn status_of(err: &Error) -> FracrbStatus {
    match err {
        Error::Io(_) => FracrbStatus::IoError,
        Error::Format(_) => FracrbStatus::BadFormat,
        Error::OutOfDomain { .. } => FracrbStatus::OutOfDomain,
        Error::NoCertification(_) => FracrbStatus::NoCertification,
        Error::InvalidInput(_) | Error::Config(_) => FracrbStatus::InvalidArgument,
        _ => FracrbStatus::NumericalFailure,
    }
}

/// Opaque handle for a loaded model.
pub struct FracrbModel {
    bundle: ModelBundle,
    /// Reassembled truth-side context; present when the container carries
    /// stability data (needed for certified bounds) and for L2 norms.
    problem: TruthProblem,
    mass: Csr,
}

/// Basic dimensions of a loaded model.
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct FracrbModelInfo {
    /// Number of reduced basis vectors.
    pub n_basis: usize,
    /// Length of a trace field (vertices of the 2D grid).
    pub trace_len: usize,
    /// 1 for the lower fractional-order range (s <= 1/2), 2 for the upper.
    pub subdomain: u32,
    /// Smallest and largest trainable order.
    pub s_min: f64,
    pub s_max: f64,
    /// Number of affine operator terms.
    pub n_terms: usize,
    /// 1 when certified error bounds are available.
    pub has_certification: u8,
    /// 1 when the model expects the extra load parameter `nu`.
    pub needs_nu: u8,
}

/// Version string of the library; static storage, do not free.
#[no_mangle]
pub extern "C" fn fracrb_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Loads a model container. On success writes a handle to `out`; the handle
/// must be released with `fracrb_model_free`.
#[no_mangle]
pub unsafe extern "C" fn fracrb_model_load(
    path: *const c_char,
    out: *mut *mut FracrbModel,
) -> FracrbStatus {
    if path.is_null() || out.is_null() {
        return FracrbStatus::NullPointer;
    }
    let result = catch_unwind(AssertUnwindSafe(|| {
        let Ok(path) = CStr::from_ptr(path).to_str() else {
            return Err(FracrbStatus::InvalidUtf8);
        };
        let bundle = load_bundle(Path::new(path)).map_err(|e| status_of(&e))?;
        let problem = bundle
            .rebuild_problem(SolverOptions::default())
            .map_err(|e| status_of(&e))?;
        let mass = problem.mass_full.clone();
        Ok(Box::new(FracrbModel {
            bundle,
            problem,
            mass,
        }))
    }));
    match result {
        Ok(Ok(model)) => {
            *out = Box::into_raw(model);
            FracrbStatus::Ok
        }
        Ok(Err(status)) => status,
        Err(_) => FracrbStatus::Panic,
    }
}

/// Releases a handle obtained from `fracrb_model_load`. Null is a no-op.
#[no_mangle]
pub unsafe extern "C" fn fracrb_model_free(model: *mut FracrbModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Fills `out` with the model dimensions.
#[no_mangle]
pub unsafe extern "C" fn fracrb_model_info(
    model: *const FracrbModel,
    out: *mut FracrbModelInfo,
) -> FracrbStatus {
    if model.is_null() || out.is_null() {
        return FracrbStatus::NullPointer;
    }
    let model = &*model;
    let reduced = &model.bundle.reduced;
    let (s_min, s_max) = reduced.subdomain.s_range();
    *out = FracrbModelInfo {
        n_basis: reduced.n_basis(),
        trace_len: reduced.trace_snapshots[0].len(),
        subdomain: match reduced.subdomain {
            fracrb::param::Subdomain::D1 => 1,
            fracrb::param::Subdomain::D2 => 2,
        },
        s_min,
        s_max,
        n_terms: reduced.eim.q(),
        has_certification: u8::from(model.bundle.scm.is_some() && reduced.cert.is_some()),
        needs_nu: u8::from(reduced.rhs == fracrb::fem::RhsDescription::Example2),
    };
    FracrbStatus::Ok
}

fn parameter_for(model: &FracrbModel, s: f64, nu: f64) -> Parameter {
    let _ = model;
    if nu.is_nan() {
        Parameter::new(s)
    } else {
        Parameter::with_nu(s, nu)
    }
}

/// Online solve: writes the reduced (Lagrange) coefficients, `written` of
/// them. Pass `nu = NAN` for single-parameter models and `n_basis = 0` for
/// the full basis. `cap` is the capacity of `out` in elements.
#[no_mangle]
pub unsafe extern "C" fn fracrb_online_coeffs(
    model: *const FracrbModel,
    s: f64,
    nu: f64,
    n_basis: usize,
    out: *mut f64,
    cap: usize,
    written: *mut usize,
) -> FracrbStatus {
    if model.is_null() || out.is_null() || written.is_null() {
        return FracrbStatus::NullPointer;
    }
    let model = &*model;
    let result = catch_unwind(AssertUnwindSafe(|| {
        let mu = parameter_for(model, s, nu);
        let n = (n_basis > 0).then_some(n_basis);
        let sol = model
            .bundle
            .reduced
            .online_solve(&mu, n)
            .map_err(|e| status_of(&e))?;
        if sol.c_raw.len() > cap {
            return Err(FracrbStatus::BufferTooSmall);
        }
        Ok(sol)
    }));
    match result {
        Ok(Ok(sol)) => {
            let slice = std::slice::from_raw_parts_mut(out, sol.c_raw.len());
            for (o, &c) in slice.iter_mut().zip(sol.c_raw.iter()) {
                *o = c;
            }
            *written = sol.c_raw.len();
            FracrbStatus::Ok
        }
        Ok(Err(status)) => status,
        Err(_) => FracrbStatus::Panic,
    }
}

/// Online trace field on the 2D grid vertices. `cap` must be at least
/// `trace_len` from `fracrb_model_info`.
#[no_mangle]
pub unsafe extern "C" fn fracrb_online_trace(
    model: *const FracrbModel,
    s: f64,
    nu: f64,
    n_basis: usize,
    out: *mut f64,
    cap: usize,
) -> FracrbStatus {
    if model.is_null() || out.is_null() {
        return FracrbStatus::NullPointer;
    }
    let model = &*model;
    let result = catch_unwind(AssertUnwindSafe(|| {
        let trace_len = model.bundle.reduced.trace_snapshots[0].len();
        if cap < trace_len {
            return Err(FracrbStatus::BufferTooSmall);
        }
        let mu = parameter_for(model, s, nu);
        let n = (n_basis > 0).then_some(n_basis);
        let sol = model
            .bundle
            .reduced
            .online_solve(&mu, n)
            .map_err(|e| status_of(&e))?;
        Ok(model.bundle.reduced.online_trace(&sol))
    }));
    match result {
        Ok(Ok(trace)) => {
            let slice = std::slice::from_raw_parts_mut(out, trace.len());
            slice.copy_from_slice(&trace);
            FracrbStatus::Ok
        }
        Ok(Err(status)) => status,
        Err(_) => FracrbStatus::Panic,
    }
}

/// L2 norm over the square of the online trace.
#[no_mangle]
pub unsafe extern "C" fn fracrb_trace_l2(
    model: *const FracrbModel,
    s: f64,
    nu: f64,
    n_basis: usize,
    out: *mut f64,
) -> FracrbStatus {
    if model.is_null() || out.is_null() {
        return FracrbStatus::NullPointer;
    }
    let model = &*model;
    let result = catch_unwind(AssertUnwindSafe(|| {
        let mu = parameter_for(model, s, nu);
        let n = (n_basis > 0).then_some(n_basis);
        let sol = model
            .bundle
            .reduced
            .online_solve(&mu, n)
            .map_err(|e| status_of(&e))?;
        let trace = model.bundle.reduced.online_trace(&sol);
        Ok(model.mass.quadratic_form(&trace, &trace).max(0.0).sqrt())
    }));
    match result {
        Ok(Ok(norm)) => {
            *out = norm;
            FracrbStatus::Ok
        }
        Ok(Err(status)) => status,
        Err(_) => FracrbStatus::Panic,
    }
}

/// Certified bound of the fractional Sobolev norm of the trace error, with
/// its ingredients. Requires a container with stability data.
#[no_mangle]
pub unsafe extern "C" fn fracrb_error_bound(
    model: *const FracrbModel,
    s: f64,
    nu: f64,
    out_delta: *mut f64,
    out_residual: *mut f64,
    out_beta_lb: *mut f64,
) -> FracrbStatus {
    if model.is_null() || out_delta.is_null() {
        return FracrbStatus::NullPointer;
    }
    let model = &*model;
    let result = catch_unwind(AssertUnwindSafe(|| {
        let scm = model
            .bundle
            .scm
            .as_ref()
            .ok_or(FracrbStatus::NoCertification)?;
        let mu = parameter_for(model, s, nu);
        let sol = model
            .bundle
            .reduced
            .online_solve(&mu, None)
            .map_err(|e| status_of(&e))?;
        certify::error_bound(&model.problem, &model.bundle.reduced, scm, &mu, &sol)
            .map_err(|e| status_of(&e))
    }));
    match result {
        Ok(Ok(cert)) => {
            *out_delta = cert.delta;
            if !out_residual.is_null() {
                *out_residual = cert.residual_dual_norm;
            }
            if !out_beta_lb.is_null() {
                *out_beta_lb = cert.beta_lb;
            }
            FracrbStatus::Ok
        }
        Ok(Err(status)) => status,
        Err(_) => FracrbStatus::Panic,
    }
}
