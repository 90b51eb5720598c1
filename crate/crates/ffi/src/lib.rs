//! C ABI for the quadsbs controller and episode runner.
//!
//! Every function returns a [`QsbsStatus`]; on any non-OK status the
//! thread-local message from [`qsbs_last_error_message`] describes the
//! failure. Handles are opaque and must be released with their matching
//! `_free` function. No function takes ownership of caller memory.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use quadsbs::sim_harness::{run_episode, ControllerConfig};
use quadsbs::{Command, Config, Controller, EpisodeMetrics, FootState, GaitPhase, State};

/// Result codes of every FFI entry point.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QsbsStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullArgument = 1,
    /// Configuration text failed to parse or validate.
    InvalidConfig = 2,
    /// A numeric argument was out of range or non-finite.
    InvalidArgument = 3,
    /// The controller or simulation failed at runtime.
    RuntimeError = 4,
    /// Filesystem I/O failed.
    IoError = 5,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::new("").unwrap());
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(msg).unwrap_or_default();
    });
}

fn status_of(err: &quadsbs::Error) -> QsbsStatus {
    match err {
        quadsbs::Error::Config(_) => QsbsStatus::InvalidConfig,
        quadsbs::Error::Io { .. } => QsbsStatus::IoError,
        _ => QsbsStatus::RuntimeError,
    }
}

/// Message describing the most recent error on this thread. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn qsbs_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn qsbs_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Receding-horizon sampling controller plus its gait clock.
pub struct QsbsController {
    controller: Controller,
    phase: GaitPhase,
}

/// Completed-episode metrics.
pub struct QsbsSimResult {
    metrics: EpisodeMetrics,
}

unsafe fn parse_config(config_toml: *const c_char) -> Result<Config, QsbsStatus> {
    if config_toml.is_null() {
        set_error("config string is null");
        return Err(QsbsStatus::NullArgument);
    }
    let text = match CStr::from_ptr(config_toml).to_str() {
        Ok(t) => t,
        Err(_) => {
            set_error("config string is not valid UTF-8");
            return Err(QsbsStatus::InvalidArgument);
        }
    };
    Config::from_toml(text).map_err(|e| {
        set_error(e.to_string());
        QsbsStatus::InvalidConfig
    })
}

/// Creates a controller from TOML configuration text.
///
/// # Safety
/// `config_toml` must be a valid NUL-terminated string and `out` a valid
/// pointer; the returned handle must be released with
/// [`qsbs_controller_free`].
#[no_mangle]
pub unsafe extern "C" fn qsbs_controller_new(
    config_toml: *const c_char,
    out: *mut *mut QsbsController,
) -> QsbsStatus {
    if out.is_null() {
        set_error("output pointer is null");
        return QsbsStatus::NullArgument;
    }
    let cfg = match parse_config(config_toml) {
        Ok(c) => c,
        Err(s) => return s,
    };
    let build = || -> quadsbs::Result<Controller> {
        Controller::new(
            cfg.robot.build()?,
            cfg.gait.build()?,
            cfg.cost.clone(),
            cfg.optimizer.clone(),
            cfg.spline.knots,
        )
    };
    match build() {
        Ok(controller) => {
            let handle = Box::new(QsbsController {
                controller,
                phase: GaitPhase::start(),
            });
            *out = Box::into_raw(handle);
            QsbsStatus::Ok
        }
        Err(e) => {
            set_error(e.to_string());
            status_of(&e)
        }
    }
}

/// Releases a controller handle. A null handle is a no-op.
///
/// # Safety
/// `handle` must have come from [`qsbs_controller_new`] and must not be
/// used afterwards.
#[no_mangle]
pub unsafe extern "C" fn qsbs_controller_free(handle: *mut QsbsController) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

/// Runs one control step.
///
/// Inputs: `state` is the 12-vector (CoM position, CoM velocity, roll/
/// pitch/yaw, body angular rate), `foot_pos` the four world-frame foot
/// positions (leg-major x,y,z; swing legs should carry their predicted
/// touchdown targets), `stance` the four contact flags, and `cmd` the
/// commanded velocity plus yaw rate `(vx, vy, vz, yaw_rate)`.
///
/// Outputs: `out_grf` receives the four ground-reaction forces (leg-major),
/// `out_contact` the four contact flags of the emitted input, and
/// `out_freq_hz` the step frequency the controller selected. The internal
/// gait clock advances by one control period.
///
/// # Safety
/// All pointers must be valid for the documented lengths.
#[no_mangle]
pub unsafe extern "C" fn qsbs_controller_step(
    handle: *mut QsbsController,
    state: *const f64,
    foot_pos: *const f64,
    stance: *const u8,
    cmd: *const f64,
    out_grf: *mut f64,
    out_contact: *mut u8,
    out_freq_hz: *mut f64,
) -> QsbsStatus {
    if handle.is_null()
        || state.is_null()
        || foot_pos.is_null()
        || stance.is_null()
        || cmd.is_null()
        || out_grf.is_null()
        || out_contact.is_null()
        || out_freq_hz.is_null()
    {
        set_error("null pointer argument");
        return QsbsStatus::NullArgument;
    }
    let this = &mut *handle;
    let state = std::slice::from_raw_parts(state, 12);
    let feet_raw = std::slice::from_raw_parts(foot_pos, 12);
    let stance = std::slice::from_raw_parts(stance, 4);
    let cmd = std::slice::from_raw_parts(cmd, 4);
    if state.iter().chain(feet_raw).chain(cmd).any(|v| !v.is_finite()) {
        set_error("non-finite input value");
        return QsbsStatus::InvalidArgument;
    }

    let x = State::from_array(state.try_into().expect("slice length checked"));
    let mut positions = [nalgebra_vec(0.0, 0.0, 0.0); 4];
    let mut in_stance = [false; 4];
    for leg in 0..4 {
        positions[leg] = nalgebra_vec(
            feet_raw[3 * leg],
            feet_raw[3 * leg + 1],
            feet_raw[3 * leg + 2],
        );
        in_stance[leg] = stance[leg] != 0;
    }
    let feet = FootState {
        positions,
        in_stance,
    };
    let command = Command {
        velocity: nalgebra_vec(cmd[0], cmd[1], cmd[2]),
        yaw_rate: cmd[3],
    };

    let result = catch_unwind(AssertUnwindSafe(|| {
        this.controller
            .control_step(&x, &this.phase, &feet, &command)
    }));
    match result {
        Ok(Ok(output)) => {
            let grf = std::slice::from_raw_parts_mut(out_grf, 12);
            let contact = std::slice::from_raw_parts_mut(out_contact, 4);
            for leg in 0..4 {
                grf[3 * leg] = output.input.grf[leg].x;
                grf[3 * leg + 1] = output.input.grf[leg].y;
                grf[3 * leg + 2] = output.input.grf[leg].z;
                contact[leg] = output.input.contact[leg] as u8;
            }
            *out_freq_hz = output.freq_hz;
            this.phase.frequency_index = output.freq_index;
            this.phase = quadsbs::gait::advance_phase(
                &this.phase,
                &this.controller.gait,
                this.controller.opt.dt,
            );
            QsbsStatus::Ok
        }
        Ok(Err(e)) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_error("panic inside control step");
            QsbsStatus::RuntimeError
        }
    }
}

fn nalgebra_vec(x: f64, y: f64, z: f64) -> nalgebra::Vector3<f64> {
    nalgebra::Vector3::new(x, y, z)
}

/// Runs one seeded closed-loop episode of the configured scenario.
///
/// # Safety
/// `config_toml` must be a valid NUL-terminated string and `out` a valid
/// pointer; the returned handle must be released with
/// [`qsbs_sim_result_free`].
#[no_mangle]
pub unsafe extern "C" fn qsbs_run_episode(
    config_toml: *const c_char,
    seed: u64,
    out: *mut *mut QsbsSimResult,
) -> QsbsStatus {
    if out.is_null() {
        set_error("output pointer is null");
        return QsbsStatus::NullArgument;
    }
    let cfg = match parse_config(config_toml) {
        Ok(c) => c,
        Err(s) => return s,
    };
    let run = || -> quadsbs::Result<EpisodeMetrics> {
        let model = cfg.robot.build()?;
        let ctrl = ControllerConfig::from_config(&cfg)?;
        run_episode(&cfg.scenario, &ctrl, &model, seed)
    };
    match catch_unwind(AssertUnwindSafe(run)) {
        Ok(Ok(metrics)) => {
            *out = Box::into_raw(Box::new(QsbsSimResult { metrics }));
            QsbsStatus::Ok
        }
        Ok(Err(e)) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_error("panic inside episode run");
            QsbsStatus::RuntimeError
        }
    }
}

/// Releases an episode result handle. A null handle is a no-op.
///
/// # Safety
/// `handle` must have come from [`qsbs_run_episode`] and must not be used
/// afterwards.
#[no_mangle]
pub unsafe extern "C" fn qsbs_sim_result_free(handle: *mut QsbsSimResult) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

/// Number of control steps the episode ran before finishing or falling.
///
/// # Safety
/// `handle` must be a live episode result.
#[no_mangle]
pub unsafe extern "C" fn qsbs_sim_result_steps(handle: *const QsbsSimResult) -> usize {
    if handle.is_null() {
        return 0;
    }
    (*handle).metrics.records.len()
}

/// Whether the episode ended in a fall.
///
/// # Safety
/// `handle` must be a live episode result.
#[no_mangle]
pub unsafe extern "C" fn qsbs_sim_result_fell(handle: *const QsbsSimResult) -> bool {
    if handle.is_null() {
        return false;
    }
    (*handle).metrics.fall
}

/// Per-step mean of the realized stage cost.
///
/// # Safety
/// `handle` must be a live episode result.
#[no_mangle]
pub unsafe extern "C" fn qsbs_sim_result_mean_cost(handle: *const QsbsSimResult) -> f64 {
    if handle.is_null() {
        return f64::NAN;
    }
    (*handle).metrics.mean_stage_cost()
}

/// Mean 3-D velocity tracking error over the episode, m/s.
///
/// # Safety
/// `handle` must be a live episode result.
#[no_mangle]
pub unsafe extern "C" fn qsbs_sim_result_mean_velocity_error(
    handle: *const QsbsSimResult,
) -> f64 {
    if handle.is_null() {
        return f64::NAN;
    }
    (*handle).metrics.mean_velocity_error()
}

/// Writes the episode time series as CSV to `path`.
///
/// # Safety
/// `handle` must be a live episode result and `path` a valid
/// NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn qsbs_sim_result_write_csv(
    handle: *const QsbsSimResult,
    path: *const c_char,
) -> QsbsStatus {
    if handle.is_null() || path.is_null() {
        set_error("null pointer argument");
        return QsbsStatus::NullArgument;
    }
    let path = match CStr::from_ptr(path).to_str() {
        Ok(p) => p,
        Err(_) => {
            set_error("path is not valid UTF-8");
            return QsbsStatus::InvalidArgument;
        }
    };
    match std::fs::write(path, (*handle).metrics.to_csv()) {
        Ok(()) => QsbsStatus::Ok,
        Err(e) => {
            set_error(format!("{path}: {e}"));
            QsbsStatus::IoError
        }
    }
}
