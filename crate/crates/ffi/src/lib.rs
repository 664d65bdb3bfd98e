//! C ABI over the smartspin simulator: opaque context handle, error codes
//! and a thread-local last-error message. The header is generated into
//! `include/smartspin.h` at build time.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use smartspin::gates::{build_gate, xy_coefficients, Gate, XyGate};
use smartspin::geometry::{bessel_j0_zero, optimal_mod_frequency};
use smartspin::model::{NoiseOffset, Variant};
use smartspin::noisemaps::{gaussian_average, offset_fidelity_map, GridSpec};
use smartspin::numerics::{fidelity, FidelityMetric, PropagationConfig};
use smartspin::scenario;

/// Status codes returned by every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SmartStatus {
    Ok = 0,
    InvalidArgument = 1,
    NumericalFailure = 2,
    IoFailure = 3,
    Panic = 4,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg).unwrap_or_else(|_| CString::new("invalid error text").unwrap());
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn classify(err: &smartspin::SimError) -> SmartStatus {
    use smartspin::SimError::*;
    match err {
        Domain(_) | Config(_) | DimensionMismatch(_, _) => SmartStatus::InvalidArgument,
        NonFiniteSample { .. } | Numerical(_) | OptimizationFailed { .. } => {
            SmartStatus::NumericalFailure
        }
        Io(_) => SmartStatus::IoFailure,
    }
}

fn guard<F: FnOnce() -> Result<(), (SmartStatus, String)>>(f: F) -> SmartStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SmartStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("panic inside smartspin".into());
            SmartStatus::Panic
        }
    }
}

fn sim<T>(r: smartspin::Result<T>) -> Result<T, (SmartStatus, String)> {
    r.map_err(|e| (classify(&e), e.to_string()))
}

/// Opaque simulation context: drive strength, global-field variant and
/// integration resolution.
pub struct SmartContext {
    omega_r_mhz: f64,
    variant: Variant,
    cfg: PropagationConfig,
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn smartspin_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Last error message for this thread, or NULL when none is recorded.
/// The pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn smartspin_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| {
        e.borrow()
            .as_ref()
            .map(|c| c.as_ptr())
            .unwrap_or(std::ptr::null())
    })
}

/// Create a context. Returns NULL when the arguments are invalid
/// (`omega_r_mhz <= 0` or `steps_per_period < 64`).
#[no_mangle]
pub extern "C" fn smartspin_context_new(
    omega_r_mhz: f64,
    cosine_variant: bool,
    steps_per_period: u32,
) -> *mut SmartContext {
    if !(omega_r_mhz > 0.0) || steps_per_period < 64 {
        set_error(format!(
            "invalid context parameters: omega_r = {omega_r_mhz}, steps_per_period = {steps_per_period}"
        ));
        return std::ptr::null_mut();
    }
    let ctx = SmartContext {
        omega_r_mhz,
        variant: if cosine_variant {
            Variant::Cosine
        } else {
            Variant::Sine
        },
        cfg: PropagationConfig {
            steps_per_period,
            ..Default::default()
        },
    };
    Box::into_raw(Box::new(ctx))
}

/// Destroy a context created by `smartspin_context_new`.
///
/// # Safety
/// `ctx` must be a pointer previously returned by `smartspin_context_new`
/// that has not been freed yet (NULL is ignored).
#[no_mangle]
pub unsafe extern "C" fn smartspin_context_free(ctx: *mut SmartContext) {
    if !ctx.is_null() {
        drop(unsafe { Box::from_raw(ctx) });
    }
}

/// i-th positive zero of the zeroth-order Bessel function.
#[no_mangle]
pub extern "C" fn smartspin_bessel_j0_zero(index: u32, out: *mut f64) -> SmartStatus {
    guard(|| {
        if out.is_null() {
            return Err((SmartStatus::InvalidArgument, "out pointer is NULL".into()));
        }
        let z = sim(bessel_j0_zero(index))?;
        unsafe { *out = z };
        Ok(())
    })
}

/// Optimal modulation frequency `Ω_R√2 / j_i` in MHz.
#[no_mangle]
pub extern "C" fn smartspin_optimal_mod_frequency(
    omega_r_mhz: f64,
    root_index: u32,
    out: *mut f64,
) -> SmartStatus {
    guard(|| {
        if out.is_null() {
            return Err((SmartStatus::InvalidArgument, "out pointer is NULL".into()));
        }
        let f = sim(optimal_mod_frequency(omega_r_mhz, root_index))?;
        unsafe { *out = f };
        Ok(())
    })
}

fn ctx_ref<'a>(ctx: *const SmartContext) -> Result<&'a SmartContext, (SmartStatus, String)> {
    unsafe { ctx.as_ref() }
        .ok_or((SmartStatus::InvalidArgument, "context pointer is NULL".into()))
}

fn gate_from_c(name: *const c_char) -> Result<Gate, (SmartStatus, String)> {
    if name.is_null() {
        return Err((SmartStatus::InvalidArgument, "gate name is NULL".into()));
    }
    let s = unsafe { CStr::from_ptr(name) }
        .to_str()
        .map_err(|_| (SmartStatus::InvalidArgument, "gate name is not UTF-8".into()))?;
    sim(Gate::parse(s))
}

/// Calibrated harmonic-pair coefficients for `sqrt_x`/`sqrt_y` (and daggers).
#[no_mangle]
pub extern "C" fn smartspin_gate_coefficients(
    ctx: *const SmartContext,
    gate: *const c_char,
    n_periods: u32,
    out_nu_v_mhz: *mut f64,
    out_nu_w_mhz: *mut f64,
) -> SmartStatus {
    guard(|| {
        let ctx = ctx_ref(ctx)?;
        if out_nu_v_mhz.is_null() || out_nu_w_mhz.is_null() {
            return Err((SmartStatus::InvalidArgument, "out pointer is NULL".into()));
        }
        let xy = match gate_from_c(gate)? {
            Gate::SqrtX => XyGate::SqrtX,
            Gate::SqrtY => XyGate::SqrtY,
            Gate::SqrtXDag => XyGate::SqrtXInv,
            Gate::SqrtYDag => XyGate::SqrtYInv,
            other => {
                return Err((
                    SmartStatus::InvalidArgument,
                    format!("gate {} has no harmonic-pair coefficients", other.label()),
                ))
            }
        };
        let (v, w) = sim(xy_coefficients(
            xy,
            n_periods,
            ctx.variant,
            ctx.omega_r_mhz,
            &ctx.cfg,
        ))?;
        unsafe {
            *out_nu_v_mhz = v;
            *out_nu_w_mhz = w;
        }
        Ok(())
    })
}

/// Zero-noise-calibrated gate fidelity at one quasi-static offset pair.
#[no_mangle]
pub extern "C" fn smartspin_gate_fidelity(
    ctx: *const SmartContext,
    gate: *const c_char,
    n_periods: u32,
    delta_nu_mhz: f64,
    delta_omega: f64,
    out_fidelity: *mut f64,
) -> SmartStatus {
    guard(|| {
        let ctx = ctx_ref(ctx)?;
        if out_fidelity.is_null() {
            return Err((SmartStatus::InvalidArgument, "out pointer is NULL".into()));
        }
        let gate = gate_from_c(gate)?;
        let program = sim(build_gate(
            gate,
            n_periods,
            ctx.variant,
            ctx.omega_r_mhz,
            &ctx.cfg,
        ))?;
        let u = sim(smartspin::gates::propagate_single_qubit(
            &program,
            NoiseOffset::new(delta_nu_mhz, delta_omega),
            &ctx.cfg,
        ))?;
        let f = sim(fidelity(&u, &program.target))?;
        unsafe { *out_fidelity = f };
        Ok(())
    })
}

/// Gaussian-averaged identity-gate fidelity at noise levels `(σ_ν, σ_Ω)`,
/// using an offset grid of `grid_points`² cells spanning ±`grid_half_width`.
#[no_mangle]
pub extern "C" fn smartspin_identity_noise_average(
    ctx: *const SmartContext,
    n_periods: u32,
    sigma_nu_mhz: f64,
    sigma_omega: f64,
    out_fidelity: *mut f64,
) -> SmartStatus {
    guard(|| {
        let ctx = ctx_ref(ctx)?;
        if out_fidelity.is_null() {
            return Err((SmartStatus::InvalidArgument, "out pointer is NULL".into()));
        }
        let program = sim(build_gate(
            Gate::Identity,
            n_periods,
            ctx.variant,
            ctx.omega_r_mhz,
            &ctx.cfg,
        ))?;
        let grid = GridSpec {
            delta_nu_max_mhz: ctx.omega_r_mhz,
            delta_nu_points: 41,
            delta_omega_max: 0.5,
            delta_omega_points: 41,
        };
        let map = sim(offset_fidelity_map(
            &program,
            &grid,
            &ctx.cfg,
            FidelityMetric::OperatorOverlap,
        ))?;
        let avg = sim(gaussian_average(&map, sigma_nu_mhz, sigma_omega))?;
        unsafe { *out_fidelity = avg.value };
        Ok(())
    })
}

/// Validate a scenario config file without running it.
#[no_mangle]
pub extern "C" fn smartspin_validate_config(path: *const c_char) -> SmartStatus {
    guard(|| {
        let path = path_from_c(path)?;
        sim(scenario::load_scenario(Path::new(&path)))?;
        Ok(())
    })
}

/// Run a scenario config file (TOML config or manifest.json re-run).
#[no_mangle]
pub extern "C" fn smartspin_run_config(path: *const c_char) -> SmartStatus {
    guard(|| {
        let path = path_from_c(path)?;
        let scenario = sim(scenario::load_scenario(Path::new(&path)))?;
        sim(scenario::run(&scenario))?;
        Ok(())
    })
}

fn path_from_c(path: *const c_char) -> Result<String, (SmartStatus, String)> {
    if path.is_null() {
        return Err((SmartStatus::InvalidArgument, "path is NULL".into()));
    }
    unsafe { CStr::from_ptr(path) }
        .to_str()
        .map(|s| s.to_string())
        .map_err(|_| (SmartStatus::InvalidArgument, "path is not UTF-8".into()))
}
