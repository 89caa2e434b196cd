//! C ABI over the `manipctl` library.
//!
//! Every fallible entry point returns an [`MctlStatus`]; on failure the
//! message is available from [`mctl_last_error`] on the calling thread.
//! Objects cross the boundary as opaque handles that the caller releases
//! with the matching `*_free` function. Vectors are `double` arrays of length
//! `n` (the model's degrees of freedom); matrices are row-major `n × n`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use manipctl::analysis::{routh_stability, ErrorTransfer};
use manipctl::dynamics::{LinkParams, ManipulatorModel};
use manipctl::scenario::{preset, Scenario, ScenarioError};
use manipctl::sim::{simulate, SimResult};
use manipctl::{Error, JointVector};

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MctlStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DimensionMismatch = 3,
    Singular = 4,
    Divergence = 5,
    Unsupported = 6,
    Precondition = 7,
    Parse = 8,
    BufferTooSmall = 9,
    Panic = 10,
}

/// Recorded series of a simulation result.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MctlSeries {
    /// Sample times, one value per sample.
    Time = 0,
    /// Joint positions, `dof` values per sample.
    Position = 1,
    /// Desired joint positions.
    Desired = 2,
    /// Tracking error `q_d − q`.
    Error = 3,
    /// Applied joint torques.
    Torque = 4,
    /// Disturbance torques.
    Disturbance = 5,
}

/// Scalar summaries of a run.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MctlMetrics {
    /// RMS tracking error over the final 20% of the run, rad.
    pub rms_error_tail: f64,
    /// Whether the error entered and stayed inside the settling band.
    pub settled: bool,
    /// Settling time in seconds; NaN when `settled` is false.
    pub settling_time: f64,
    /// Integral of the squared torque norm.
    pub control_energy: f64,
}

/// Opaque manipulator model.
pub struct MctlModel(ManipulatorModel);

/// Opaque parsed scenario.
pub struct MctlScenario(Scenario);

/// Opaque simulation result.
pub struct MctlSimResult(SimResult);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: impl Into<String>) {
    let message = message.into().replace('\0', " ");
    let c = CString::new(message).expect("interior NULs removed");
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

fn clear_last_error() {
    LAST_ERROR.with(|slot| *slot.borrow_mut() = None);
}

fn status_of(e: &Error) -> MctlStatus {
    match e {
        Error::DimensionMismatch { .. } => MctlStatus::DimensionMismatch,
        Error::InvalidInput(_) => MctlStatus::InvalidArgument,
        Error::Singular { .. } => MctlStatus::Singular,
        Error::Divergence { .. } => MctlStatus::Divergence,
        Error::Unsupported(_) => MctlStatus::Unsupported,
        Error::Precondition(_) => MctlStatus::Precondition,
    }
}

struct Failure(MctlStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

impl From<ScenarioError> for Failure {
    fn from(e: ScenarioError) -> Self {
        let status = match &e {
            ScenarioError::Invalid { source, .. } => status_of(source),
            ScenarioError::Parse { .. } | ScenarioError::Io { .. } => MctlStatus::Parse,
        };
        Failure(status, e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(MctlStatus::NullPointer, format!("{what} is NULL"))
}

/// Runs `body`, recording its error message and converting panics.
fn guard(body: impl FnOnce() -> Result<(), Failure>) -> MctlStatus {
    clear_last_error();
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => MctlStatus::Ok,
        Ok(Err(Failure(status, message))) => {
            set_last_error(message);
            status
        }
        Err(_) => {
            set_last_error("internal panic");
            MctlStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    // SAFETY: caller passes a handle obtained from this library or NULL.
    unsafe { p.as_ref() }.ok_or_else(|| null(what))
}

unsafe fn vector(p: *const f64, n: usize, what: &str) -> Result<JointVector, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    // SAFETY: caller guarantees `n` readable doubles.
    Ok(JointVector::from_column_slice(unsafe {
        std::slice::from_raw_parts(p, n)
    }))
}

unsafe fn write_out(
    out: *mut f64,
    values: impl ExactSizeIterator<Item = f64>,
) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("out"));
    }
    let len = values.len();
    // SAFETY: caller guarantees room for the documented number of doubles.
    let dst = unsafe { std::slice::from_raw_parts_mut(out, len) };
    for (d, v) in dst.iter_mut().zip(values) {
        *d = v;
    }
    Ok(())
}

fn check_dof(model: &ManipulatorModel, n: usize) -> Result<(), Failure> {
    if n == model.dof() {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            what: "n",
            expected: model.dof(),
            got: n,
        }
        .into())
    }
}

/// Message for the most recent failure on this thread, or NULL after a
/// successful call. Valid until the next call into this library on the
/// same thread.
#[no_mangle]
pub extern "C" fn mctl_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// The stock two-link arm: two 1 kg, 1 m slender rods under g = 9.81 m/s².
/// Release with [`mctl_model_free`].
#[no_mangle]
pub extern "C" fn mctl_model_stock_two_link() -> *mut MctlModel {
    Box::into_raw(Box::new(MctlModel(ManipulatorModel::stock_two_link())))
}

/// Builds an `n`-link planar revolute arm from per-link parameter arrays.
///
/// # Safety
/// Each of `mass`, `length`, `com_distance` and `inertia_zz` must point to
/// `n` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mctl_model_new(
    n: usize,
    mass: *const f64,
    length: *const f64,
    com_distance: *const f64,
    inertia_zz: *const f64,
    gravity: f64,
    out: *mut *mut MctlModel,
) -> MctlStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let m = unsafe { vector(mass, n, "mass")? };
        let l = unsafe { vector(length, n, "length")? };
        let c = unsafe { vector(com_distance, n, "com_distance")? };
        let i = unsafe { vector(inertia_zz, n, "inertia_zz")? };
        let links = (0..n)
            .map(|k| LinkParams::new(m[k], l[k], c[k], i[k]))
            .collect::<Result<Vec<_>, _>>()?;
        let model = ManipulatorModel::new(links, gravity)?;
        // SAFETY: checked non-NULL above.
        unsafe { *out = Box::into_raw(Box::new(MctlModel(model))) };
        Ok(())
    })
}

/// # Safety
/// `model` must be NULL or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mctl_model_free(model: *mut MctlModel) {
    if !model.is_null() {
        // SAFETY: handle was created by Box::into_raw in this library.
        drop(unsafe { Box::from_raw(model) });
    }
}

/// Degrees of freedom, or 0 for a NULL handle.
///
/// # Safety
/// `model` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mctl_model_dof(model: *const MctlModel) -> usize {
    unsafe { model.as_ref() }.map_or(0, |m| m.0.dof())
}

/// Writes the `n × n` inertia matrix `M(q)` row-major into `out`.
///
/// # Safety
/// `q` must hold `n` doubles and `out` room for `n * n`.
#[no_mangle]
pub unsafe extern "C" fn mctl_model_mass_matrix(
    model: *const MctlModel,
    q: *const f64,
    n: usize,
    out: *mut f64,
) -> MctlStatus {
    guard(|| {
        let model = &unsafe { deref(model, "model")? }.0;
        check_dof(model, n)?;
        let m = model.mass_matrix(&unsafe { vector(q, n, "q")? })?;
        unsafe { write_out(out, m.transpose().iter().copied()) }
    })
}

/// Writes the `n × n` Coriolis/centrifugal matrix `C(q, q̇)` row-major into `out`.
///
/// # Safety
/// `q` and `qdot` must hold `n` doubles and `out` room for `n * n`.
#[no_mangle]
pub unsafe extern "C" fn mctl_model_coriolis_matrix(
    model: *const MctlModel,
    q: *const f64,
    qdot: *const f64,
    n: usize,
    out: *mut f64,
) -> MctlStatus {
    guard(|| {
        let model = &unsafe { deref(model, "model")? }.0;
        check_dof(model, n)?;
        let c = model.coriolis_matrix(&unsafe { vector(q, n, "q")? }, &unsafe {
            vector(qdot, n, "qdot")?
        })?;
        unsafe { write_out(out, c.transpose().iter().copied()) }
    })
}

/// Writes the gravity torque vector `g(q)` into `out`.
///
/// # Safety
/// `q` must hold `n` doubles and `out` room for `n`.
#[no_mangle]
pub unsafe extern "C" fn mctl_model_gravity_vector(
    model: *const MctlModel,
    q: *const f64,
    n: usize,
    out: *mut f64,
) -> MctlStatus {
    guard(|| {
        let model = &unsafe { deref(model, "model")? }.0;
        check_dof(model, n)?;
        let g = model.gravity_vector(&unsafe { vector(q, n, "q")? })?;
        unsafe { write_out(out, g.iter().copied()) }
    })
}

/// Torque `M q̈ + C q̇ + g` that produces the acceleration `qddot`.
///
/// # Safety
/// `q`, `qdot`, `qddot` must hold `n` doubles and `out` room for `n`.
#[no_mangle]
pub unsafe extern "C" fn mctl_model_inverse_dynamics(
    model: *const MctlModel,
    q: *const f64,
    qdot: *const f64,
    qddot: *const f64,
    n: usize,
    out: *mut f64,
) -> MctlStatus {
    guard(|| {
        let model = &unsafe { deref(model, "model")? }.0;
        check_dof(model, n)?;
        let tau = model.inverse_dynamics(
            &unsafe { vector(q, n, "q")? },
            &unsafe { vector(qdot, n, "qdot")? },
            &unsafe { vector(qddot, n, "qddot")? },
        )?;
        unsafe { write_out(out, tau.iter().copied()) }
    })
}

/// Joint acceleration under torque `u` and disturbance `d` (`d` may be NULL
/// for no disturbance).
///
/// # Safety
/// `q`, `qdot`, `u` (and `d` when non-NULL) must hold `n` doubles and `out`
/// room for `n`.
#[no_mangle]
pub unsafe extern "C" fn mctl_model_forward_dynamics(
    model: *const MctlModel,
    q: *const f64,
    qdot: *const f64,
    u: *const f64,
    d: *const f64,
    n: usize,
    out: *mut f64,
) -> MctlStatus {
    guard(|| {
        let model = &unsafe { deref(model, "model")? }.0;
        check_dof(model, n)?;
        let d = if d.is_null() {
            JointVector::zeros(n)
        } else {
            unsafe { vector(d, n, "d")? }
        };
        let acc = model.forward_dynamics(
            &unsafe { vector(q, n, "q")? },
            &unsafe { vector(qdot, n, "qdot")? },
            &unsafe { vector(u, n, "u")? },
            &d,
        )?;
        unsafe { write_out(out, acc.iter().copied()) }
    })
}

/// Routh–Hurwitz test for `s³ + kd s² + kp s + ki`.
///
/// # Safety
/// `stable` and `margin` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mctl_routh_stability(
    kd: f64,
    kp: f64,
    ki: f64,
    stable: *mut bool,
    margin: *mut f64,
) -> MctlStatus {
    guard(|| {
        if stable.is_null() || margin.is_null() {
            return Err(null("output"));
        }
        let v = routh_stability(kd, kp, ki);
        // SAFETY: checked non-NULL above.
        unsafe {
            *stable = v.stable;
            *margin = v.margin;
        }
        Ok(())
    })
}

/// Roots of `s³ + kd s² + kp s + ki`, sorted by real part.
///
/// # Safety
/// `re` and `im` must each have room for 3 doubles.
#[no_mangle]
pub unsafe extern "C" fn mctl_poles(
    kd: f64,
    kp: f64,
    ki: f64,
    re: *mut f64,
    im: *mut f64,
) -> MctlStatus {
    guard(|| {
        let poles = ErrorTransfer::new(kd, kp, ki)?.poles();
        unsafe {
            write_out(re, poles.iter().map(|p| p.re))?;
            write_out(im, poles.iter().map(|p| p.im))
        }
    })
}

/// Parses a scenario from NUL-terminated TOML text.
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn mctl_scenario_from_toml(
    text: *const c_char,
    out: *mut *mut MctlScenario,
) -> MctlStatus {
    guard(|| {
        if text.is_null() || out.is_null() {
            return Err(null("argument"));
        }
        // SAFETY: caller guarantees a NUL-terminated string.
        let text = unsafe { CStr::from_ptr(text) }.to_str().map_err(|e| {
            Failure(
                MctlStatus::Parse,
                format!("scenario text is not UTF-8: {e}"),
            )
        })?;
        let scenario = Scenario::from_toml_str(text, "<ffi>")?;
        unsafe { *out = Box::into_raw(Box::new(MctlScenario(scenario))) };
        Ok(())
    })
}

/// Built-in scenario by name: `fig6`, `fig7`, `fig7-pd` or `fig8`.
///
/// # Safety
/// `name` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn mctl_scenario_preset(
    name: *const c_char,
    out: *mut *mut MctlScenario,
) -> MctlStatus {
    guard(|| {
        if name.is_null() || out.is_null() {
            return Err(null("argument"));
        }
        let name = unsafe { CStr::from_ptr(name) }.to_string_lossy();
        let scenario = preset(&name).ok_or_else(|| {
            Failure(
                MctlStatus::InvalidArgument,
                format!("no preset named '{name}'"),
            )
        })?;
        unsafe { *out = Box::into_raw(Box::new(MctlScenario(scenario))) };
        Ok(())
    })
}

/// # Safety
/// `scenario` must be NULL or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mctl_scenario_free(scenario: *mut MctlScenario) {
    if !scenario.is_null() {
        drop(unsafe { Box::from_raw(scenario) });
    }
}

/// Runs the scenario's closed-loop simulation.
///
/// # Safety
/// `scenario` must be a live handle and `out` writable. Release the result
/// with [`mctl_result_free`].
#[no_mangle]
pub unsafe extern "C" fn mctl_simulate(
    scenario: *const MctlScenario,
    out: *mut *mut MctlSimResult,
) -> MctlStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let exp = unsafe { deref(scenario, "scenario")? }.0.build()?;
        let result = simulate(
            &exp.model,
            &exp.controller,
            &exp.trajectory,
            &exp.disturbance,
            &exp.config,
        )?;
        unsafe { *out = Box::into_raw(Box::new(MctlSimResult(result))) };
        Ok(())
    })
}

/// # Safety
/// `result` must be NULL or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mctl_result_free(result: *mut MctlSimResult) {
    if !result.is_null() {
        drop(unsafe { Box::from_raw(result) });
    }
}

/// Number of recorded samples, or 0 for a NULL handle.
///
/// # Safety
/// `result` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mctl_result_len(result: *const MctlSimResult) -> usize {
    unsafe { result.as_ref() }.map_or(0, |r| r.0.len())
}

/// Joint count of the run, or 0 for a NULL handle.
///
/// # Safety
/// `result` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mctl_result_dof(result: *const MctlSimResult) -> usize {
    unsafe { result.as_ref() }.map_or(0, |r| r.0.dof())
}

/// # Safety
/// `result` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn mctl_result_metrics(
    result: *const MctlSimResult,
    out: *mut MctlMetrics,
) -> MctlStatus {
    guard(|| {
        let m = unsafe { deref(result, "result")? }.0.metrics;
        if out.is_null() {
            return Err(null("out"));
        }
        unsafe {
            *out = MctlMetrics {
                rms_error_tail: m.rms_error_tail,
                settled: m.settling_time.is_some(),
                settling_time: m.settling_time.unwrap_or(f64::NAN),
                control_energy: m.control_energy,
            }
        };
        Ok(())
    })
}

/// Copies one recorded series into `out`, sample-major: `len` values for
/// [`MctlSeries::Time`], `len * dof` for the others. `capacity` is the
/// number of doubles available at `out`.
///
/// # Safety
/// `result` must be a live handle and `out` must have room for `capacity` doubles.
#[no_mangle]
pub unsafe extern "C" fn mctl_result_copy_series(
    result: *const MctlSimResult,
    series: MctlSeries,
    out: *mut f64,
    capacity: usize,
) -> MctlStatus {
    guard(|| {
        let r = &unsafe { deref(result, "result")? }.0;
        let rows = match series {
            MctlSeries::Time => return unsafe { copy_checked(out, capacity, r.t.iter().copied()) },
            MctlSeries::Position => &r.q,
            MctlSeries::Desired => &r.q_d,
            MctlSeries::Error => &r.error,
            MctlSeries::Torque => &r.u,
            MctlSeries::Disturbance => &r.d,
        };
        let values: Vec<f64> = rows.iter().flat_map(|v| v.iter().copied()).collect();
        unsafe { copy_checked(out, capacity, values.into_iter()) }
    })
}

unsafe fn copy_checked(
    out: *mut f64,
    capacity: usize,
    values: impl ExactSizeIterator<Item = f64>,
) -> Result<(), Failure> {
    if values.len() > capacity {
        return Err(Failure(
            MctlStatus::BufferTooSmall,
            format!(
                "series needs {} doubles, buffer holds {capacity}",
                values.len()
            ),
        ));
    }
    unsafe { write_out(out, values) }
}
