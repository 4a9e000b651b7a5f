//! C ABI for the urngraph library.
//!
//! Conventions:
//! - Graphs are opaque handles created by [`ug_graph_parse`] and released
//!   by [`ug_graph_free`].
//! - Every fallible call returns a [`UgStatus`]; on failure a
//!   thread-local message is readable via [`ug_last_error_message`] until
//!   the next failing call on the same thread.
//! - Structured results come back as JSON strings allocated by Rust;
//!   release them with [`ug_string_free`].
//! - Vertex indices inside JSON are 1-based, matching every other external
//!   surface of the library.

use std::cell::RefCell;
use std::ffi::{CStr, CString};
use std::ptr;

use libc::c_char;

use urngraph::dynamics::{self, DomainParams, SimplexPoint};
use urngraph::equilibria;
use urngraph::report;
use urngraph::urn::{self, TrialConfig};
use urngraph::Graph;

/// Status codes returned by every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UgStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullArgument = 1,
    /// A string argument was not valid UTF-8.
    InvalidUtf8 = 2,
    /// The edge-list text failed to parse or validate.
    ParseError = 3,
    /// Inputs violate the domain (dimensions, simplex, edge sums, floor).
    DomainError = 4,
    /// Equilibrium analysis failed.
    SolverError = 5,
    /// Simulation configuration or execution failed.
    SimulationError = 6,
}

/// Opaque graph handle.
pub struct UgGraph {
    inner: Graph,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let cstring = CString::new(message.replace('\0', " "))
        .unwrap_or_else(|_| CString::new("error message unavailable").unwrap());
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(cstring));
}

fn fail(status: UgStatus, message: impl ToString) -> UgStatus {
    set_error(message.to_string());
    status
}

/// Message of the most recent failure on this thread, or null. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn ug_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| {
        slot.borrow()
            .as_ref()
            .map_or(ptr::null(), |msg| msg.as_ptr())
    })
}

/// Frees a string returned by any `*_json` call.
///
/// # Safety
/// `s` must be a pointer previously returned by this library and not yet
/// freed; null is tolerated.
#[no_mangle]
pub unsafe extern "C" fn ug_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

fn emit_string(out: *mut *mut c_char, body: String) -> UgStatus {
    match CString::new(body) {
        Ok(cstring) => {
            unsafe { *out = cstring.into_raw() };
            UgStatus::Ok
        }
        Err(e) => fail(UgStatus::SolverError, format!("interior NUL in output: {e}")),
    }
}

/// Parses an edge-list text (one `u v` pair per line, 1-based labels,
/// `#` comments) into a new graph handle.
///
/// # Safety
/// `text` must be a valid NUL-terminated string; `out` must be a valid
/// writable pointer.
#[no_mangle]
pub unsafe extern "C" fn ug_graph_parse(text: *const c_char, out: *mut *mut UgGraph) -> UgStatus {
    if text.is_null() || out.is_null() {
        return fail(UgStatus::NullArgument, "text and out must be non-null");
    }
    let Ok(text) = CStr::from_ptr(text).to_str() else {
        return fail(UgStatus::InvalidUtf8, "edge list is not valid UTF-8");
    };
    match urngraph::parse_edge_list(text) {
        Ok(inner) => {
            *out = Box::into_raw(Box::new(UgGraph { inner }));
            UgStatus::Ok
        }
        Err(e) => fail(UgStatus::ParseError, e),
    }
}

/// Releases a graph handle; null is tolerated.
///
/// # Safety
/// `g` must come from [`ug_graph_parse`] and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn ug_graph_free(g: *mut UgGraph) {
    if !g.is_null() {
        drop(Box::from_raw(g));
    }
}

/// Number of vertices, or 0 for a null handle.
///
/// # Safety
/// `g` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn ug_graph_vertex_count(g: *const UgGraph) -> u32 {
    g.as_ref().map_or(0, |g| g.inner.vertex_count() as u32)
}

/// Number of edges, or 0 for a null handle.
///
/// # Safety
/// `g` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn ug_graph_edge_count(g: *const UgGraph) -> u32 {
    g.as_ref().map_or(0, |g| g.inner.edge_count() as u32)
}

unsafe fn graph_arg<'a>(g: *const UgGraph) -> Result<&'a Graph, UgStatus> {
    match g.as_ref() {
        Some(h) => Ok(&h.inner),
        None => Err(fail(UgStatus::NullArgument, "graph handle is null")),
    }
}

fn domain_arg(g: &Graph, c: f64) -> Result<DomainParams, UgStatus> {
    if c <= 0.0 {
        Ok(DomainParams::default_for(g))
    } else {
        DomainParams::new(c, g).map_err(|e| fail(UgStatus::DomainError, e))
    }
}

unsafe fn point_arg(g: &Graph, v: *const f64, len: usize) -> Result<SimplexPoint, UgStatus> {
    if v.is_null() {
        return Err(fail(UgStatus::NullArgument, "coordinate array is null"));
    }
    if len != g.vertex_count() {
        return Err(fail(
            UgStatus::DomainError,
            format!("expected {} coordinates, got {len}", g.vertex_count()),
        ));
    }
    let coords = std::slice::from_raw_parts(v, len).to_vec();
    SimplexPoint::new(coords).map_err(|e| fail(UgStatus::DomainError, e))
}

/// Bipartiteness class and sizes as JSON.
///
/// # Safety
/// `g` must be a live handle; `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn ug_classify_json(g: *const UgGraph, out: *mut *mut c_char) -> UgStatus {
    if out.is_null() {
        return fail(UgStatus::NullArgument, "out must be non-null");
    }
    let g = match graph_arg(g) {
        Ok(g) => g,
        Err(s) => return s,
    };
    let report = report::ClassifyReport::of(g);
    match serde_json::to_string(&report) {
        Ok(body) => emit_string(out, body),
        Err(e) => fail(UgStatus::SolverError, e),
    }
}

/// Evaluates the Lyapunov function at `v` (length `len`).
///
/// # Safety
/// Pointer arguments must be valid; `v` must have `len` readable doubles.
#[no_mangle]
pub unsafe extern "C" fn ug_lyapunov(
    g: *const UgGraph,
    v: *const f64,
    len: usize,
    out: *mut f64,
) -> UgStatus {
    if out.is_null() {
        return fail(UgStatus::NullArgument, "out must be non-null");
    }
    let g = match graph_arg(g) {
        Ok(g) => g,
        Err(s) => return s,
    };
    let point = match point_arg(g, v, len) {
        Ok(p) => p,
        Err(s) => return s,
    };
    match dynamics::lyapunov(g, &point) {
        Ok(value) => {
            *out = value;
            UgStatus::Ok
        }
        Err(e) => fail(UgStatus::DomainError, e),
    }
}

/// Writes the gradient of the Lyapunov function into `out` (length `len`).
///
/// # Safety
/// As [`ug_lyapunov`], with `out` holding `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn ug_grad_lyapunov(
    g: *const UgGraph,
    v: *const f64,
    len: usize,
    out: *mut f64,
) -> UgStatus {
    if out.is_null() {
        return fail(UgStatus::NullArgument, "out must be non-null");
    }
    let g = match graph_arg(g) {
        Ok(g) => g,
        Err(s) => return s,
    };
    let point = match point_arg(g, v, len) {
        Ok(p) => p,
        Err(s) => return s,
    };
    match dynamics::grad_lyapunov(g, &point) {
        Ok(grad) => {
            std::slice::from_raw_parts_mut(out, len).copy_from_slice(&grad);
            UgStatus::Ok
        }
        Err(e) => fail(UgStatus::DomainError, e),
    }
}

/// Writes the vector field at `v` into `out` (length `len`).
///
/// # Safety
/// As [`ug_grad_lyapunov`].
#[no_mangle]
pub unsafe extern "C" fn ug_vector_field(
    g: *const UgGraph,
    v: *const f64,
    len: usize,
    out: *mut f64,
) -> UgStatus {
    if out.is_null() {
        return fail(UgStatus::NullArgument, "out must be non-null");
    }
    let g = match graph_arg(g) {
        Ok(g) => g,
        Err(s) => return s,
    };
    let point = match point_arg(g, v, len) {
        Ok(p) => p,
        Err(s) => return s,
    };
    match dynamics::vector_field(g, &point) {
        Ok(field) => {
            std::slice::from_raw_parts_mut(out, len).copy_from_slice(&field);
            UgStatus::Ok
        }
        Err(e) => fail(UgStatus::DomainError, e),
    }
}

/// Full equilibria report (census, spectra, limit set, warnings) as JSON.
/// Pass `c <= 0` for the default floor `1/(100N)`.
///
/// # Safety
/// `g` must be a live handle; `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn ug_equilibria_json(
    g: *const UgGraph,
    c: f64,
    out: *mut *mut c_char,
) -> UgStatus {
    if out.is_null() {
        return fail(UgStatus::NullArgument, "out must be non-null");
    }
    let g = match graph_arg(g) {
        Ok(g) => g,
        Err(s) => return s,
    };
    let dom = match domain_arg(g, c) {
        Ok(d) => d,
        Err(s) => return s,
    };
    match report::equilibria_report(g, &dom) {
        Ok(rep) => match serde_json::to_string(&rep) {
            Ok(body) => emit_string(out, body),
            Err(e) => fail(UgStatus::SolverError, e),
        },
        Err(e) => fail(UgStatus::SolverError, e),
    }
}

/// The predicted limit set as JSON. Pass `c <= 0` for the default floor.
///
/// # Safety
/// `g` must be a live handle; `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn ug_predict_limit_json(
    g: *const UgGraph,
    c: f64,
    out: *mut *mut c_char,
) -> UgStatus {
    if out.is_null() {
        return fail(UgStatus::NullArgument, "out must be non-null");
    }
    let g = match graph_arg(g) {
        Ok(g) => g,
        Err(s) => return s,
    };
    let dom = match domain_arg(g, c) {
        Ok(d) => d,
        Err(s) => return s,
    };
    match equilibria::predict_limit(g, &dom) {
        Ok(limit) => match serde_json::to_string(&report::LimitSetJson::of(&limit)) {
            Ok(body) => emit_string(out, body),
            Err(e) => fail(UgStatus::SolverError, e),
        },
        Err(e) => fail(UgStatus::SolverError, e),
    }
}

/// Runs one trial and returns its samples and final state as JSON.
/// `b0` holds `len` initial ball counts (all at least 1).
///
/// # Safety
/// `g` must be a live handle; `b0` must hold `len` readable values; `out`
/// must be writable.
#[no_mangle]
pub unsafe extern "C" fn ug_run_trial_json(
    g: *const UgGraph,
    b0: *const u64,
    len: usize,
    steps: u64,
    seed: u64,
    alpha: f64,
    sample_stride: u64,
    out: *mut *mut c_char,
) -> UgStatus {
    if out.is_null() || b0.is_null() {
        return fail(UgStatus::NullArgument, "b0 and out must be non-null");
    }
    let g = match graph_arg(g) {
        Ok(g) => g,
        Err(s) => return s,
    };
    let balls = std::slice::from_raw_parts(b0, len);
    let cfg = TrialConfig {
        steps,
        seed,
        alpha,
        sample_stride,
    };
    match urn::run_trial(g, balls, &cfg) {
        Ok(result) => {
            let samples: Vec<serde_json::Value> = result
                .samples
                .iter()
                .map(|s| {
                    serde_json::json!({
                        "n": s.n,
                        "tau": s.tau,
                        "x": s.point.coords(),
                    })
                })
                .collect();
            let body = serde_json::json!({
                "seed": result.seed,
                "final": result.final_point.coords(),
                "samples": samples,
            });
            emit_string(out, body.to_string())
        }
        Err(e) => fail(UgStatus::SimulationError, e),
    }
}

/// Runs a Monte Carlo batch and returns the full summary (per-trial
/// outcomes plus aggregate stats) as JSON. Pass `c <= 0` for the default
/// floor.
///
/// # Safety
/// As [`ug_run_trial_json`].
#[no_mangle]
pub unsafe extern "C" fn ug_monte_carlo_json(
    g: *const UgGraph,
    c: f64,
    b0: *const u64,
    len: usize,
    trials: u64,
    steps: u64,
    seed: u64,
    alpha: f64,
    out: *mut *mut c_char,
) -> UgStatus {
    if out.is_null() || b0.is_null() {
        return fail(UgStatus::NullArgument, "b0 and out must be non-null");
    }
    let g = match graph_arg(g) {
        Ok(g) => g,
        Err(s) => return s,
    };
    let dom = match domain_arg(g, c) {
        Ok(d) => d,
        Err(s) => return s,
    };
    let balls = std::slice::from_raw_parts(b0, len).to_vec();
    let cfg = TrialConfig {
        steps,
        seed,
        alpha,
        sample_stride: steps.max(1),
    };
    match urn::monte_carlo(g, &dom, &balls, trials, &cfg) {
        Ok(summary) => {
            let rep = report::simulation_summary(g, &dom, &balls, &cfg, &summary);
            match serde_json::to_string(&rep) {
                Ok(body) => emit_string(out, body),
                Err(e) => fail(UgStatus::SolverError, e),
            }
        }
        Err(e) => fail(UgStatus::SimulationError, e),
    }
}
