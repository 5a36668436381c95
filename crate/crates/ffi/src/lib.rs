//! C ABI over the safety filter, the avoidance environment and the audit
//! primitives.
//!
//! Every fallible function returns a [`ShieldrlStatus`]. On failure a
//! human-readable message is kept per thread and can be read with
//! [`shieldrl_last_error`]. Handles are opaque and owned by the caller, who
//! releases them with the matching `*_free` function. Panics never cross the
//! boundary; they surface as `SHIELDRL_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use shieldrl::env::{AvoidanceEnv, EnvConfig, EnvError, SafeEnv, TerminationReason, OBS_DIM};
use shieldrl::ops::{atomic_write, sha256_file, OpsError};
use shieldrl::safety::{
    self, BarrierParams, DualBarrierCbf, SafetyError, SafetyFilter, SafetyFilterResult, SafetyState,
};
use shieldrl::Vec2;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShieldrlStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidState = 3,
    InvalidParams = 4,
    NonFiniteAction = 5,
    DegenerateGeometry = 6,
    InfeasibleConstraints = 7,
    InvalidConfig = 8,
    EpisodeDone = 9,
    BufferTooSmall = 10,
    Io = 11,
    Panic = 12,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ShieldrlVec2 {
    pub x: f64,
    pub y: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShieldrlBarrierParams {
    pub alpha: f64,
    pub tau_lag: f64,
    pub a_max: f64,
    pub v_max: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ShieldrlSafetyState {
    /// Drone position minus obstacle center.
    pub rel_position: ShieldrlVec2,
    pub drone_velocity: ShieldrlVec2,
    pub obstacle_velocity: ShieldrlVec2,
    pub drone_radius: f64,
    pub obstacle_radius: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ShieldrlFilterResult {
    pub safe_action: ShieldrlVec2,
    pub modified: bool,
    pub h_hard: f64,
    pub h_soft: f64,
    pub active_hard: bool,
    pub active_soft: bool,
    pub box_clipped: bool,
    pub box_fallback: bool,
}

/// `termination_reason` is -1 while the episode runs, otherwise 0 success,
/// 1 collision, 2 out of arena, 3 timeout.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ShieldrlStepResult {
    pub reward: f64,
    pub terminated: bool,
    pub truncated: bool,
    pub termination_reason: i32,
}

/// Opaque filter handle.
pub struct ShieldrlFilter(DualBarrierCbf);

/// Opaque environment handle.
pub struct ShieldrlEnv(AvoidanceEnv);

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(message: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = message.into());
}

#[derive(Debug)]
struct Fail(ShieldrlStatus, String);

impl From<SafetyError> for Fail {
    fn from(e: SafetyError) -> Self {
        let status = match e {
            SafetyError::InvalidState(_) | SafetyError::BatchLengthMismatch { .. } => ShieldrlStatus::InvalidState,
            SafetyError::InvalidParams(_) => ShieldrlStatus::InvalidParams,
            SafetyError::NonFiniteAction => ShieldrlStatus::NonFiniteAction,
            SafetyError::DegenerateGeometry { .. } => ShieldrlStatus::DegenerateGeometry,
            SafetyError::InfeasibleConstraints => ShieldrlStatus::InfeasibleConstraints,
        };
        Fail(status, e.to_string())
    }
}

impl From<EnvError> for Fail {
    fn from(e: EnvError) -> Self {
        let status = match e {
            EnvError::InvalidConfig(_) => ShieldrlStatus::InvalidConfig,
            EnvError::SteppedAfterTermination => ShieldrlStatus::EpisodeDone,
            EnvError::NonFiniteAction => ShieldrlStatus::NonFiniteAction,
            EnvError::BatchShapeMismatch { .. } => ShieldrlStatus::InvalidArgument,
        };
        Fail(status, e.to_string())
    }
}

impl From<OpsError> for Fail {
    fn from(e: OpsError) -> Self {
        Fail(ShieldrlStatus::Io, e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(ShieldrlStatus::NullPointer, format!("{what} is null"))
}

/// Runs `f`, converting errors and panics into a status code.
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> ShieldrlStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => ShieldrlStatus::Ok,
        Ok(Err(Fail(status, message))) => {
            set_error(message);
            status
        }
        Err(_) => {
            set_error("internal panic");
            ShieldrlStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    // SAFETY: the caller guarantees a non-null `p` points to a valid `T`.
    unsafe { p.as_ref() }.ok_or_else(|| null(what))
}

unsafe fn deref_mut<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Fail> {
    // SAFETY: as for `deref`, plus exclusive access for the call.
    unsafe { p.as_mut() }.ok_or_else(|| null(what))
}

unsafe fn c_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    // SAFETY: non-null and NUL-terminated per the caller contract.
    unsafe { CStr::from_ptr(p) }
        .to_str()
        .map_err(|_| Fail(ShieldrlStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

impl From<ShieldrlVec2> for Vec2 {
    fn from(v: ShieldrlVec2) -> Self {
        Vec2::new(v.x, v.y)
    }
}

impl From<Vec2> for ShieldrlVec2 {
    fn from(v: Vec2) -> Self {
        ShieldrlVec2 { x: v.x, y: v.y }
    }
}

impl From<ShieldrlBarrierParams> for BarrierParams {
    fn from(p: ShieldrlBarrierParams) -> Self {
        BarrierParams {
            alpha: p.alpha,
            tau_lag: p.tau_lag,
            a_max: p.a_max,
            v_max: p.v_max,
        }
    }
}

impl From<&SafetyState> for ShieldrlSafetyState {
    fn from(s: &SafetyState) -> Self {
        ShieldrlSafetyState {
            rel_position: s.rel_position.into(),
            drone_velocity: s.drone_velocity.into(),
            obstacle_velocity: s.obstacle_velocity.into(),
            drone_radius: s.drone_radius,
            obstacle_radius: s.obstacle_radius,
        }
    }
}

impl ShieldrlSafetyState {
    fn to_core(self) -> Result<SafetyState, Fail> {
        Ok(SafetyState::new(
            self.rel_position.into(),
            self.drone_velocity.into(),
            self.obstacle_velocity.into(),
            self.drone_radius,
            self.obstacle_radius,
        )?)
    }
}

impl From<SafetyFilterResult> for ShieldrlFilterResult {
    fn from(r: SafetyFilterResult) -> Self {
        ShieldrlFilterResult {
            safe_action: r.safe_action.into(),
            modified: r.modified,
            h_hard: r.h_hard,
            h_soft: r.h_soft,
            active_hard: r.active_hard,
            active_soft: r.active_soft,
            box_clipped: r.box_clipped,
            box_fallback: r.box_fallback,
        }
    }
}

/// Copies the thread's last error message into `buf` (NUL-terminated,
/// truncated to fit). Returns the full message length in bytes, excluding
/// the terminator.
///
/// # Safety
/// `buf` must be null or valid for `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn shieldrl_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            // SAFETY: `buf` holds at least `len > n` bytes.
            unsafe {
                std::ptr::copy_nonoverlapping(msg.as_ptr().cast::<c_char>(), buf, n);
                *buf.add(n) = 0;
            }
        }
        msg.len()
    })
}

/// Length of an environment observation vector.
#[no_mangle]
pub extern "C" fn shieldrl_obs_dim() -> usize {
    OBS_DIM
}

#[no_mangle]
pub extern "C" fn shieldrl_barrier_params_default() -> ShieldrlBarrierParams {
    let p = BarrierParams::default();
    ShieldrlBarrierParams {
        alpha: p.alpha,
        tau_lag: p.tau_lag,
        a_max: p.a_max,
        v_max: p.v_max,
    }
}

/// Creates a filter. On success `*out` owns a handle for
/// [`shieldrl_filter_free`].
///
/// # Safety
/// `params` must be null or point to a valid struct; `out` must be null or
/// writable.
#[no_mangle]
pub unsafe extern "C" fn shieldrl_filter_new(
    params: *const ShieldrlBarrierParams,
    out: *mut *mut ShieldrlFilter,
) -> ShieldrlStatus {
    guard(|| {
        let params = unsafe { deref(params, "params") }?;
        let out = unsafe { deref_mut(out, "out") }?;
        let filter = DualBarrierCbf::new((*params).into())?;
        *out = Box::into_raw(Box::new(ShieldrlFilter(filter)));
        Ok(())
    })
}

/// # Safety
/// `filter` must be null or a handle from [`shieldrl_filter_new`] that has
/// not been freed.
#[no_mangle]
pub unsafe extern "C" fn shieldrl_filter_free(filter: *mut ShieldrlFilter) {
    if !filter.is_null() {
        // SAFETY: produced by Box::into_raw in shieldrl_filter_new.
        drop(unsafe { Box::from_raw(filter) });
    }
}

/// # Safety
/// Pointers must be null or valid; `filter` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn shieldrl_filter_action(
    filter: *const ShieldrlFilter,
    state: *const ShieldrlSafetyState,
    nominal: ShieldrlVec2,
    out: *mut ShieldrlFilterResult,
) -> ShieldrlStatus {
    guard(|| {
        let filter = unsafe { deref(filter, "filter") }?;
        let state = unsafe { deref(state, "state") }?.to_core()?;
        let out = unsafe { deref_mut(out, "out") }?;
        *out = filter.0.filter_action(&[], nominal.into(), &state)?.into();
        Ok(())
    })
}

/// Filters `len` independent elements. Each element's status lands in
/// `statuses[i]` and a failing element never affects its neighbours; the
/// return value reports only argument errors.
///
/// # Safety
/// `states`, `nominals`, `results` and `statuses` must each be valid for
/// `len` elements (they may be null when `len` is 0).
#[no_mangle]
pub unsafe extern "C" fn shieldrl_filter_action_batch(
    filter: *const ShieldrlFilter,
    states: *const ShieldrlSafetyState,
    nominals: *const ShieldrlVec2,
    len: usize,
    results: *mut ShieldrlFilterResult,
    statuses: *mut ShieldrlStatus,
) -> ShieldrlStatus {
    guard(|| {
        let filter = unsafe { deref(filter, "filter") }?;
        if len == 0 {
            return Ok(());
        }
        if states.is_null() || nominals.is_null() || results.is_null() || statuses.is_null() {
            return Err(null("batch buffer"));
        }
        // SAFETY: all four buffers hold `len` elements per the contract.
        let (states, nominals, results, statuses) = unsafe {
            (
                std::slice::from_raw_parts(states, len),
                std::slice::from_raw_parts(nominals, len),
                std::slice::from_raw_parts_mut(results, len),
                std::slice::from_raw_parts_mut(statuses, len),
            )
        };
        for i in 0..len {
            let one = states[i]
                .to_core()
                .and_then(|s| Ok(filter.0.filter_action(&[], nominals[i].into(), &s)?));
            match one {
                Ok(r) => {
                    results[i] = r.into();
                    statuses[i] = ShieldrlStatus::Ok;
                }
                Err(Fail(status, _)) => {
                    results[i] = ShieldrlFilterResult::default();
                    statuses[i] = status;
                }
            }
        }
        Ok(())
    })
}

/// Squared-distance barrier `‖r‖² − R²`.
///
/// # Safety
/// Pointers must be null or valid.
#[no_mangle]
pub unsafe extern "C" fn shieldrl_h_hard(state: *const ShieldrlSafetyState, out: *mut f64) -> ShieldrlStatus {
    guard(|| {
        let state = unsafe { deref(state, "state") }?.to_core()?;
        *unsafe { deref_mut(out, "out") }? = safety::h_hard(&state);
        Ok(())
    })
}

/// Predictive barrier `‖r‖ − R − D(‖v‖)`.
///
/// # Safety
/// Pointers must be null or valid.
#[no_mangle]
pub unsafe extern "C" fn shieldrl_h_soft(
    state: *const ShieldrlSafetyState,
    params: *const ShieldrlBarrierParams,
    out: *mut f64,
) -> ShieldrlStatus {
    guard(|| {
        let state = unsafe { deref(state, "state") }?.to_core()?;
        let params: BarrierParams = (*unsafe { deref(params, "params") }?).into();
        params.validate()?;
        *unsafe { deref_mut(out, "out") }? = safety::h_soft(&state, &params);
        Ok(())
    })
}

/// Creates an environment from a JSON config (NUL-terminated UTF-8). Missing
/// fields take their defaults; unknown fields are rejected. The environment
/// is reset with the config's seed.
///
/// # Safety
/// `config_json` must be null or NUL-terminated; `out` null or writable.
#[no_mangle]
pub unsafe extern "C" fn shieldrl_env_new(config_json: *const c_char, out: *mut *mut ShieldrlEnv) -> ShieldrlStatus {
    guard(|| {
        let text = unsafe { c_str(config_json, "config_json") }?;
        let out = unsafe { deref_mut(out, "out") }?;
        let config: EnvConfig =
            serde_json::from_str(text).map_err(|e| Fail(ShieldrlStatus::InvalidConfig, e.to_string()))?;
        *out = Box::into_raw(Box::new(ShieldrlEnv(AvoidanceEnv::new(config)?)));
        Ok(())
    })
}

/// # Safety
/// `env` must be null or a live handle from [`shieldrl_env_new`].
#[no_mangle]
pub unsafe extern "C" fn shieldrl_env_free(env: *mut ShieldrlEnv) {
    if !env.is_null() {
        // SAFETY: produced by Box::into_raw in shieldrl_env_new.
        drop(unsafe { Box::from_raw(env) });
    }
}

unsafe fn write_observation(obs: Vec<f64>, buf: *mut f64, len: usize) -> Result<(), Fail> {
    if buf.is_null() {
        return Ok(());
    }
    if len < obs.len() {
        return Err(Fail(
            ShieldrlStatus::BufferTooSmall,
            format!("observation needs {} slots, got {len}", obs.len()),
        ));
    }
    // SAFETY: `buf` holds at least `len >= obs.len()` doubles.
    unsafe { std::ptr::copy_nonoverlapping(obs.as_ptr(), buf, obs.len()) };
    Ok(())
}

/// Resets the episode. When `obs` is non-null it receives the first
/// observation and must hold at least [`shieldrl_obs_dim`] doubles.
///
/// # Safety
/// `env` must be a live handle; `obs` null or valid for `obs_len` doubles.
#[no_mangle]
pub unsafe extern "C" fn shieldrl_env_reset(
    env: *mut ShieldrlEnv,
    seed: u64,
    obs: *mut f64,
    obs_len: usize,
) -> ShieldrlStatus {
    guard(|| {
        let env = unsafe { deref_mut(env, "env") }?;
        let (first, _) = env.0.reset(seed)?;
        unsafe { write_observation(first, obs, obs_len) }
    })
}

/// Applies one action. `obs` (optional) receives the next observation.
///
/// # Safety
/// `env` must be a live handle; `out` null or writable; `obs` null or valid
/// for `obs_len` doubles.
#[no_mangle]
pub unsafe extern "C" fn shieldrl_env_step(
    env: *mut ShieldrlEnv,
    action: ShieldrlVec2,
    obs: *mut f64,
    obs_len: usize,
    out: *mut ShieldrlStepResult,
) -> ShieldrlStatus {
    guard(|| {
        let env = unsafe { deref_mut(env, "env") }?;
        let out = unsafe { deref_mut(out, "out") }?;
        if !obs.is_null() && obs_len < OBS_DIM {
            return Err(Fail(
                ShieldrlStatus::BufferTooSmall,
                format!("observation needs {OBS_DIM} slots"),
            ));
        }
        let step = env.0.step(action.into())?;
        *out = ShieldrlStepResult {
            reward: step.reward,
            terminated: step.terminated,
            truncated: step.truncated,
            termination_reason: step.termination_reason.map_or(-1, reason_code),
        };
        unsafe { write_observation(step.observation, obs, obs_len) }
    })
}

fn reason_code(r: TerminationReason) -> i32 {
    match r {
        TerminationReason::Success => 0,
        TerminationReason::Collision => 1,
        TerminationReason::OutOfArena => 2,
        TerminationReason::Timeout => 3,
    }
}

/// Safety state against the current critical obstacle.
///
/// # Safety
/// `env` must be a live handle; `out` null or writable.
#[no_mangle]
pub unsafe extern "C" fn shieldrl_env_safety_state(
    env: *const ShieldrlEnv,
    out: *mut ShieldrlSafetyState,
) -> ShieldrlStatus {
    guard(|| {
        let env = unsafe { deref(env, "env") }?;
        *unsafe { deref_mut(out, "out") }? = (&env.0.safety_state()).into();
        Ok(())
    })
}

/// Streaming SHA-256 of a file. `out_hex` receives 64 lowercase hex digits
/// and a NUL terminator, so it must hold at least 65 bytes.
///
/// # Safety
/// `path` must be NUL-terminated; `out_hex` valid for 65 bytes.
#[no_mangle]
pub unsafe extern "C" fn shieldrl_sha256_file(path: *const c_char, out_hex: *mut c_char) -> ShieldrlStatus {
    guard(|| {
        let path = unsafe { c_str(path, "path") }?;
        if out_hex.is_null() {
            return Err(null("out_hex"));
        }
        let digest = sha256_file(Path::new(path))?;
        // SAFETY: `out_hex` holds 65 bytes and the digest is 64 ASCII bytes.
        unsafe {
            std::ptr::copy_nonoverlapping(digest.as_ptr().cast::<c_char>(), out_hex, digest.len());
            *out_hex.add(digest.len()) = 0;
        }
        Ok(())
    })
}

/// Crash-safe replace of `path` with `len` bytes: write `<path>.tmp`, sync,
/// rename over `path`, sync the directory.
///
/// # Safety
/// `path` must be NUL-terminated; `bytes` valid for `len` bytes (may be null
/// when `len` is 0).
#[no_mangle]
pub unsafe extern "C" fn shieldrl_atomic_write(path: *const c_char, bytes: *const u8, len: usize) -> ShieldrlStatus {
    guard(|| {
        let path = unsafe { c_str(path, "path") }?;
        let data: &[u8] = if len == 0 {
            &[]
        } else if bytes.is_null() {
            return Err(null("bytes"));
        } else {
            // SAFETY: `bytes` holds `len` bytes per the contract.
            unsafe { std::slice::from_raw_parts(bytes, len) }
        };
        atomic_write(Path::new(path), data)?;
        Ok(())
    })
}
