//! C ABI over [`Batch`], for trainers that load the engine in-process.
//!
//! Status codes match the wire `ERROR` codes (`0` is success). Results are
//! copied out in the same byte layout as a `RESULT` frame payload.
//!
//! ```c
//! HecoHandle *h = heco_create("{\"task\":\"team_support\",\"coordination\":2}");
//! heco_reset(h, 42, 16);
//! uint8_t *buf = malloc(heco_result_size(h));
//! heco_step(h, actions, 16 * n_agents);
//! heco_copy_result(h, buf, heco_result_size(h));
//! heco_destroy(h);
//! ```

use std::ffi::{c_char, CStr};
use std::ptr;

use crate::config::EnvConfig;
use crate::error::Error;
use crate::vecenv::{Batch, StepResult};
use crate::wire::frame::{self, codes};

pub const HECO_OK: i32 = 0;

pub struct HecoHandle {
    config: EnvConfig,
    batch: Option<Batch>,
    result: Option<StepResult>,
}

fn status(err: &Error) -> i32 {
    let code = match err {
        e if e.is_config() => codes::INFEASIBLE_CONFIG,
        _ => codes::BAD_PAYLOAD,
    };
    code as i32
}

/// Creates a handle from a JSON config. Returns null if the JSON is invalid
/// or the config cannot be instantiated.
///
/// # Safety
/// `config_json` must be a valid NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn heco_create(config_json: *const c_char) -> *mut HecoHandle {
    if config_json.is_null() {
        return ptr::null_mut();
    }
    let bytes = CStr::from_ptr(config_json).to_bytes();
    match EnvConfig::from_json(bytes) {
        Ok(config) if config.validate().is_ok() => {
            Box::into_raw(Box::new(HecoHandle { config, batch: None, result: None }))
        }
        _ => ptr::null_mut(),
    }
}

/// # Safety
/// `handle` must come from [`heco_create`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn heco_destroy(handle: *mut HecoHandle) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

/// # Safety
/// `handle` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn heco_reset(handle: *mut HecoHandle, master_seed: u64, batch: u32) -> i32 {
    let Some(h) = handle.as_mut() else { return codes::BAD_PAYLOAD as i32 };
    match Batch::reset(&h.config, batch as usize, master_seed) {
        Ok((b, r)) => {
            h.batch = Some(b);
            h.result = Some(r);
            HECO_OK
        }
        Err(e) => status(&e),
    }
}

/// # Safety
/// `handle` must be a live handle and `actions` must point to `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn heco_step(handle: *mut HecoHandle, actions: *const u8, len: usize) -> i32 {
    let Some(h) = handle.as_mut() else { return codes::BAD_PAYLOAD as i32 };
    let (Some(batch), Some(result)) = (h.batch.as_mut(), h.result.as_mut()) else {
        return codes::OUT_OF_ORDER as i32;
    };
    if actions.is_null() && len > 0 {
        return codes::BAD_PAYLOAD as i32;
    }
    let actions = if len == 0 { &[][..] } else { std::slice::from_raw_parts(actions, len) };
    match batch.step_into(actions, result) {
        Ok(()) => HECO_OK,
        Err(e) => status(&e),
    }
}

/// Size in bytes of the latest result, 0 before the first reset.
///
/// # Safety
/// `handle` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn heco_result_size(handle: *const HecoHandle) -> usize {
    match handle.as_ref().and_then(|h| h.result.as_ref()) {
        Some(r) => frame::result_len(r.batch, r.n_agents, r.view),
        None => 0,
    }
}

/// Copies the latest result into `out` using the `RESULT` payload layout.
///
/// # Safety
/// `handle` must be a live handle and `out` must be writable for `cap` bytes.
#[no_mangle]
pub unsafe extern "C" fn heco_copy_result(handle: *const HecoHandle, out: *mut u8, cap: usize) -> i32 {
    let Some(h) = handle.as_ref() else { return codes::BAD_PAYLOAD as i32 };
    let Some(result) = h.result.as_ref() else { return codes::OUT_OF_ORDER as i32 };
    let bytes = frame::encode_result(result);
    if out.is_null() || cap < bytes.len() {
        return codes::BAD_PAYLOAD as i32;
    }
    ptr::copy_nonoverlapping(bytes.as_ptr(), out, bytes.len());
    HECO_OK
}
