//! C ABI over the aoa-lab library.
//!
//! - scenarios are opaque handles created from JSON (text or file) and
//!   released with [`aoa_scenario_free`]
//! - results come back through flat `repr(C)` out-structs
//! - every entry point returns an [`AoaStatus`]; on failure a per-thread
//!   message is readable via [`aoa_last_error`]
//! - panics never cross the boundary (caught and reported as `Internal`)
//!
//! The matching header is generated into `include/aoa_lab.h` at build time.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use aoa_lab::analytics::{BatterySpec, Regime};
use aoa_lab::error::Error;
use aoa_lab::optimizer::{optimize_aoa_finite, optimize_aoa_infinite, optimize_aoi, OptMethod, OptimumReport};
use aoa_lab::scenario::{Scenario, ScenarioFile};
use aoa_lab::simulator::{simulate, SimConfig};

/// Result of every C-ABI call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AoaStatus {
    /// Success.
    Ok = 0,
    /// A required pointer argument was null.
    NullPointer = 1,
    /// The scenario JSON failed parsing or validation.
    InvalidSchema = 2,
    /// An argument was outside its documented domain.
    InvalidArgument = 3,
    /// The direct link never succeeds; every age metric is infinite.
    Infeasible = 4,
    /// Not enough data for the requested statistic.
    InsufficientData = 5,
    /// The result is valid but the optimizer raised a numerical caveat
    /// (grid fallback or closed-form/grid mismatch); details via
    /// `aoa_last_error`.
    NumericalFlag = 6,
    /// Unexpected internal failure (including caught panics).
    Internal = 7,
}

/// Opaque scenario handle: a validated configuration plus the simulation
/// defaults carried by the file it came from.
pub struct AoaScenario {
    file: ScenarioFile,
    scenario: Scenario,
}

/// Closed-form analysis of a scenario at its configured operating point.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AoaAnalysis {
    /// Activation probability of the status-update transmitter.
    pub q1: f64,
    /// Activation probability of the power transmitter.
    pub q2: f64,
    /// Data success, status link alone.
    pub p_d1: f64,
    /// Data success, both links active.
    pub p_d12: f64,
    /// Energy success, power link alone.
    pub p_e2: f64,
    /// Energy success, both links active.
    pub p_e12: f64,
    /// Joint per-slot outcome probabilities and their marginals.
    pub p_de: f64,
    pub p_dne: f64,
    pub p_nde: f64,
    pub p_ndne: f64,
    pub p_d: f64,
    pub p_e: f64,
    /// Steady-state probability the battery is empty, and its complement.
    pub p_empty: f64,
    pub p_nonempty: f64,
    /// Average ages in slots; may be infinity.
    pub avg_aoi: f64,
    pub avg_aoa: f64,
    /// True when energy arrivals are the bottleneck.
    pub energy_limited: bool,
}

/// Headline statistics of one simulation run.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AoaSimStats {
    pub mean_aoi: f64,
    pub mean_aoa: f64,
    /// Fraction of counted slots with an actuation.
    pub actuation_rate: f64,
    /// Fraction of counted slots that began with an empty battery.
    pub p_empty_hat: f64,
    /// Slots contributing to the statistics (horizon minus warmup).
    pub slots_counted: u64,
    pub actuations: u64,
    /// Seed actually used, for reproduction.
    pub seed: u64,
}

/// An optimization result.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AoaOptimum {
    pub q1_star: f64,
    pub q2_star: f64,
    /// Average age at the optimum; may be infinity.
    pub value: f64,
    /// True when the point came from grid search rather than closed form.
    pub grid_search: bool,
    /// True when a numerical caveat was raised (status is then
    /// `NumericalFlag`).
    pub flagged: bool,
}

// ----------------------------------------------------------------------------
// error reporting

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: impl Into<Vec<u8>>) {
    let c = CString::new(message).unwrap_or_else(|_| CString::new("invalid error text").unwrap());
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

fn clear_error() {
    LAST_ERROR.with(|slot| *slot.borrow_mut() = None);
}

fn fail(status: AoaStatus, message: impl Into<Vec<u8>>) -> AoaStatus {
    set_error(message);
    status
}

fn status_of(err: &Error) -> AoaStatus {
    match err {
        Error::Schema(_) | Error::Json(_) => AoaStatus::InvalidSchema,
        Error::InvalidParameter { .. } | Error::GradientUndefined { .. } | Error::NoResets => {
            AoaStatus::InvalidArgument
        }
        Error::Infeasible => AoaStatus::Infeasible,
        Error::InsufficientActuations { .. } => AoaStatus::InsufficientData,
        Error::Io(_) => AoaStatus::Internal,
    }
}

fn report(err: &Error) -> AoaStatus {
    fail(status_of(err), err.to_string())
}

/// Run a body with panic containment; the callee only sees a status code.
fn guard(f: impl FnOnce() -> AoaStatus) -> AoaStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(_) => fail(AoaStatus::Internal, "panic caught at the C boundary"),
    }
}

/// Message for the most recent failing call on this thread, or null.
///
/// The pointer stays valid until the next call into this library from the
/// same thread.
#[no_mangle]
pub extern "C" fn aoa_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static nul-terminated string.
#[no_mangle]
pub extern "C" fn aoa_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

// ----------------------------------------------------------------------------
// scenario lifecycle

fn install(file: ScenarioFile, out: *mut *mut AoaScenario) -> AoaStatus {
    match file.scenario() {
        Ok(scenario) => {
            let handle = Box::new(AoaScenario { file, scenario });
            unsafe { *out = Box::into_raw(handle) };
            AoaStatus::Ok
        }
        Err(e) => report(&e),
    }
}

/// Parse a scenario from a JSON document.
///
/// On success writes a freshly allocated handle to `out`; release it with
/// [`aoa_scenario_free`].
///
/// # Safety
/// `json` must be a valid nul-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn aoa_scenario_from_json(
    json: *const c_char,
    out: *mut *mut AoaScenario,
) -> AoaStatus {
    guard(|| {
        if json.is_null() || out.is_null() {
            return fail(AoaStatus::NullPointer, "json and out must be non-null");
        }
        let text = match unsafe { CStr::from_ptr(json) }.to_str() {
            Ok(t) => t,
            Err(_) => return fail(AoaStatus::InvalidSchema, "scenario JSON must be UTF-8"),
        };
        match ScenarioFile::parse(text) {
            Ok(file) => install(file, out),
            Err(e) => report(&e),
        }
    })
}

/// Load a scenario from a JSON file on disk.
///
/// # Safety
/// `path` must be a valid nul-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn aoa_scenario_load(
    path: *const c_char,
    out: *mut *mut AoaScenario,
) -> AoaStatus {
    guard(|| {
        if path.is_null() || out.is_null() {
            return fail(AoaStatus::NullPointer, "path and out must be non-null");
        }
        let path = match unsafe { CStr::from_ptr(path) }.to_str() {
            Ok(p) => p,
            Err(_) => return fail(AoaStatus::InvalidSchema, "path must be UTF-8"),
        };
        match ScenarioFile::load(path.as_ref()) {
            Ok(file) => install(file, out),
            Err(e) => report(&e),
        }
    })
}

/// Release a handle returned by the constructors; null is a no-op.
///
/// # Safety
/// `scenario` must have come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn aoa_scenario_free(scenario: *mut AoaScenario) {
    if !scenario.is_null() {
        drop(unsafe { Box::from_raw(scenario) });
    }
}

unsafe fn deref<'a>(scenario: *const AoaScenario) -> Option<&'a AoaScenario> {
    unsafe { scenario.as_ref() }
}

// ----------------------------------------------------------------------------
// operations

/// Closed-form analysis at the scenario's configured (q1, q2).
///
/// # Safety
/// `scenario` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn aoa_analyze(
    scenario: *const AoaScenario,
    out: *mut AoaAnalysis,
) -> AoaStatus {
    guard(|| {
        let (Some(handle), false) = (unsafe { deref(scenario) }, out.is_null()) else {
            return fail(AoaStatus::NullPointer, "scenario and out must be non-null");
        };
        let r = handle.scenario.analyze();
        unsafe {
            *out = AoaAnalysis {
                q1: r.q1,
                q2: r.q2,
                p_d1: r.success_probs.p_d1,
                p_d12: r.success_probs.p_d12,
                p_e2: r.success_probs.p_e2,
                p_e12: r.success_probs.p_e12,
                p_de: r.outcome.p_de,
                p_dne: r.outcome.p_dne,
                p_nde: r.outcome.p_nde,
                p_ndne: r.outcome.p_ndne,
                p_d: r.outcome.p_d,
                p_e: r.outcome.p_e,
                p_empty: r.steady_state.p_empty,
                p_nonempty: r.steady_state.p_nonempty,
                avg_aoi: r.ages.avg_aoi,
                avg_aoa: r.ages.avg_aoa,
                energy_limited: r.steady_state.regime == Regime::EnergyLimited,
            };
        }
        AoaStatus::Ok
    })
}

/// Simulate the scenario.
///
/// `horizon == 0` means "use the horizon and warmup from the scenario
/// file (or their defaults)"; otherwise the caller's values are used.
/// The seed is always the caller's.
///
/// # Safety
/// `scenario` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn aoa_simulate(
    scenario: *const AoaScenario,
    horizon: u64,
    warmup: u64,
    seed: u64,
    out: *mut AoaSimStats,
) -> AoaStatus {
    guard(|| {
        let (Some(handle), false) = (unsafe { deref(scenario) }, out.is_null()) else {
            return fail(AoaStatus::NullPointer, "scenario and out must be non-null");
        };
        let (horizon, warmup) = if horizon == 0 {
            (handle.file.sim_horizon(), handle.file.sim_warmup())
        } else {
            (horizon, warmup)
        };
        let cfg = SimConfig {
            scenario: handle.scenario.clone(),
            horizon,
            warmup,
            seed,
            trace: false,
        };
        match simulate(&cfg) {
            Ok(r) => {
                unsafe {
                    *out = AoaSimStats {
                        mean_aoi: r.mean_aoi,
                        mean_aoa: r.mean_aoa,
                        actuation_rate: r.actuation_rate,
                        p_empty_hat: r.p_empty_hat,
                        slots_counted: r.slots_counted,
                        actuations: r.actuations,
                        seed: r.seed,
                    };
                }
                AoaStatus::Ok
            }
            Err(e) => report(&e),
        }
    })
}

fn fill_optimum(report: &OptimumReport, out: *mut AoaOptimum) -> AoaStatus {
    let flagged = report.flag.is_some();
    unsafe {
        *out = AoaOptimum {
            q1_star: report.q1_star,
            q2_star: report.q2_star,
            value: report.value,
            grid_search: report.method == OptMethod::GridSearch,
            flagged,
        };
    }
    if flagged {
        fail(AoaStatus::NumericalFlag, format!("{}: {:?}", report.case_label, report.flag))
    } else {
        AoaStatus::Ok
    }
}

/// Best (q1, q2) for average information age.
///
/// # Safety
/// `scenario` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn aoa_optimize_aoi(
    scenario: *const AoaScenario,
    out: *mut AoaOptimum,
) -> AoaStatus {
    guard(|| {
        let (Some(handle), false) = (unsafe { deref(scenario) }, out.is_null()) else {
            return fail(AoaStatus::NullPointer, "scenario and out must be non-null");
        };
        match optimize_aoi(&handle.scenario.channel.success_probs()) {
            Ok(r) => fill_optimum(&r, out),
            Err(e) => report(&e),
        }
    })
}

/// Best (q1, q2) for average actuation age under the scenario's battery
/// model; finite batteries use grid search at the file's grid step.
///
/// `out` is filled whenever the return is `Ok` or `NumericalFlag`.
///
/// # Safety
/// `scenario` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn aoa_optimize_aoa(
    scenario: *const AoaScenario,
    out: *mut AoaOptimum,
) -> AoaStatus {
    guard(|| {
        let (Some(handle), false) = (unsafe { deref(scenario) }, out.is_null()) else {
            return fail(AoaStatus::NullPointer, "scenario and out must be non-null");
        };
        let sp = handle.scenario.channel.success_probs();
        let result = match handle.scenario.battery {
            BatterySpec::Infinite => optimize_aoa_infinite(&sp),
            BatterySpec::Finite(m) => optimize_aoa_finite(&sp, m, handle.file.grid_step(), false),
        };
        match result {
            Ok(r) => fill_optimum(&r, out),
            Err(e) => report(&e),
        }
    })
}
