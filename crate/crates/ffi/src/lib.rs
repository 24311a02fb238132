//! C ABI over `drfsim`.
//!
//! Every fallible call returns a [`DrfStatus`] and writes results through out
//! pointers. On failure the message is kept per thread and can be read with
//! [`drf_last_error_message`]. Frames are opaque handles created by
//! [`drf_frame_new`] and released with [`drf_frame_free`]. Panics never cross
//! the boundary; they surface as [`DrfStatus::Panic`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use drfsim::classical::{classical_fidelity_series, fitted_step};
use drfsim::coherent::convexity_test;
use drfsim::harness::half_life;
use drfsim::quantum::{apply_map, closed_form_fidelity, quantum_fidelity, FrameState, KrausSet};
use drfsim::{Error, SpinLabel};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DrfStatus {
    Ok = 0,
    NullPointer = 1,
    Domain = 2,
    Accuracy = 3,
    Convergence = 4,
    Consistency = 5,
    BufferTooSmall = 6,
    Panic = 7,
}

/// A spin-`j` frame evolving under repeated probe measurements whose
/// outcomes are discarded.
pub struct DrfFrame {
    kraus: KrausSet,
    state: FrameState,
    steps: u64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: String) {
    let message = CString::new(message.replace('\0', " ")).expect("interior NULs were removed");
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(message));
}

fn fail(status: DrfStatus, message: impl Into<String>) -> DrfStatus {
    set_last_error(message.into());
    status
}

fn from_error(err: Error) -> DrfStatus {
    let status = match &err {
        Error::Domain { .. } => DrfStatus::Domain,
        Error::Accuracy { .. } => DrfStatus::Accuracy,
        Error::Convergence { .. } => DrfStatus::Convergence,
        Error::Consistency { .. } => DrfStatus::Consistency,
    };
    fail(status, err.to_string())
}

/// Runs `body`, turning library errors and panics into status codes.
fn guard<F>(body: F) -> DrfStatus
where
    F: FnOnce() -> Result<(), DrfStatus>,
{
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => DrfStatus::Ok,
        Ok(Err(status)) => status,
        Err(payload) => {
            let what = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".to_string());
            fail(DrfStatus::Panic, format!("panic inside drfsim: {what}"))
        }
    }
}

fn spin(twice_j: u32) -> Result<SpinLabel, DrfStatus> {
    if twice_j == 0 {
        return Err(fail(DrfStatus::Domain, "twice_j must be at least 1"));
    }
    Ok(SpinLabel::from_twice(twice_j))
}

/// # Safety
/// `ptr` must be null or valid for writes of one `T`.
unsafe fn write_out<T>(ptr: *mut T, value: T) -> Result<(), DrfStatus> {
    if ptr.is_null() {
        return Err(fail(DrfStatus::NullPointer, "output pointer is null"));
    }
    ptr.write(value);
    Ok(())
}

/// # Safety
/// `frame` must be null or a live handle from [`drf_frame_new`].
unsafe fn frame_ref<'a>(frame: *const DrfFrame) -> Result<&'a DrfFrame, DrfStatus> {
    frame.as_ref().ok_or_else(|| fail(DrfStatus::NullPointer, "frame handle is null"))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn drf_version() -> *const c_char {
    static VERSION: &CStr = match CStr::from_bytes_with_nul(concat!(env!("CARGO_PKG_VERSION"), "\0").as_bytes()) {
        Ok(s) => s,
        Err(_) => panic!("version string contains a NUL"),
    };
    VERSION.as_ptr()
}

/// Static description of a status code.
#[no_mangle]
pub extern "C" fn drf_status_message(status: DrfStatus) -> *const c_char {
    let text: &'static CStr = match status {
        DrfStatus::Ok => c"ok",
        DrfStatus::NullPointer => c"null pointer argument",
        DrfStatus::Domain => c"argument outside the domain of the operation",
        DrfStatus::Accuracy => c"requested accuracy cannot be met",
        DrfStatus::Convergence => c"iteration did not converge",
        DrfStatus::Consistency => c"internal consistency check failed",
        DrfStatus::BufferTooSmall => c"output buffer too small",
        DrfStatus::Panic => c"internal panic",
    };
    text.as_ptr()
}

/// Message of the most recent failure on this thread, or null if none.
/// The pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn drf_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |m| m.as_ptr()))
}

/// Closed-form fidelity after `n` measurements of a frame of spin `twice_j / 2`.
///
/// # Safety
/// `out` must be null or valid for one `double` write.
#[no_mangle]
pub unsafe extern "C" fn drf_closed_form_fidelity(twice_j: u32, n: u64, out: *mut f64) -> DrfStatus {
    guard(|| write_out(out, closed_form_fidelity(spin(twice_j)?, n)))
}

/// Classical kick angle (radians) that reproduces the quantum decay.
///
/// # Safety
/// `out` must be null or valid for one `double` write.
#[no_mangle]
pub unsafe extern "C" fn drf_fitted_step(twice_j: u32, out: *mut f64) -> DrfStatus {
    guard(|| write_out(out, fitted_step(spin(twice_j)?)))
}

/// Number of measurements after which the decaying fidelity term halves.
///
/// # Safety
/// `out` must be null or valid for one `double` write.
#[no_mangle]
pub unsafe extern "C" fn drf_half_life(twice_j: u32, out: *mut f64) -> DrfStatus {
    guard(|| write_out(out, half_life(spin(twice_j)?).map_err(from_error)?))
}

/// Creates a frame aligned with its reference axis.
///
/// # Safety
/// `out` must be null or valid for one pointer write. The handle written
/// there must be released with [`drf_frame_free`].
#[no_mangle]
pub unsafe extern "C" fn drf_frame_new(twice_j: u32, out: *mut *mut DrfFrame) -> DrfStatus {
    guard(|| {
        if out.is_null() {
            return Err(fail(DrfStatus::NullPointer, "output pointer is null"));
        }
        let s = spin(twice_j)?;
        let kraus = KrausSet::build(s).map_err(from_error)?;
        let frame = Box::new(DrfFrame { kraus, state: FrameState::highest_weight(s), steps: 0 });
        out.write(Box::into_raw(frame));
        Ok(())
    })
}

/// Releases a frame. Null is ignored.
///
/// # Safety
/// `frame` must be null or a handle from [`drf_frame_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn drf_frame_free(frame: *mut DrfFrame) {
    if !frame.is_null() {
        drop(Box::from_raw(frame));
    }
}

/// Applies `n` further measurements to the frame.
///
/// # Safety
/// `frame` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn drf_frame_step(frame: *mut DrfFrame, n: u64) -> DrfStatus {
    guard(|| {
        let frame = frame.as_mut().ok_or_else(|| fail(DrfStatus::NullPointer, "frame handle is null"))?;
        for _ in 0..n {
            frame.state = apply_map(&frame.state, &frame.kraus).map_err(from_error)?;
            frame.steps += 1;
        }
        Ok(())
    })
}

/// Number of measurements applied so far.
///
/// # Safety
/// `frame` must be null or a live handle; `out` null or valid for one write.
#[no_mangle]
pub unsafe extern "C" fn drf_frame_steps_taken(frame: *const DrfFrame, out: *mut u64) -> DrfStatus {
    guard(|| write_out(out, frame_ref(frame)?.steps))
}

/// Current measurement fidelity of the frame.
///
/// # Safety
/// `frame` must be null or a live handle; `out` null or valid for one write.
#[no_mangle]
pub unsafe extern "C" fn drf_frame_fidelity(frame: *const DrfFrame, out: *mut f64) -> DrfStatus {
    guard(|| {
        let frame = frame_ref(frame)?;
        write_out(out, quantum_fidelity(&frame.state, &frame.kraus).map_err(from_error)?)
    })
}

/// Copies the `2j + 1` populations (ascending `m`) into `buffer`. The
/// required length is always written to `written` when it is non-null, so a
/// call with `len = 0` queries the size.
///
/// # Safety
/// `frame` must be null or a live handle; `buffer` must be valid for `len`
/// writes when `len > 0`; `written` null or valid for one write.
#[no_mangle]
pub unsafe extern "C" fn drf_frame_populations(
    frame: *const DrfFrame,
    buffer: *mut f64,
    len: usize,
    written: *mut usize,
) -> DrfStatus {
    guard(|| {
        let pops = frame_ref(frame)?.state.populations();
        if !written.is_null() {
            written.write(pops.len());
        }
        copy_out(&pops, buffer, len)
    })
}

unsafe fn copy_out(values: &[f64], buffer: *mut f64, len: usize) -> Result<(), DrfStatus> {
    if len < values.len() {
        return Err(fail(
            DrfStatus::BufferTooSmall,
            format!("buffer holds {len} values but {} are needed", values.len()),
        ));
    }
    if buffer.is_null() {
        return Err(fail(DrfStatus::NullPointer, "output buffer is null"));
    }
    ptr::copy_nonoverlapping(values.as_ptr(), buffer, values.len());
    Ok(())
}

/// Classical-walk fidelity for `n = 0..=n_max`, written to `buffer`
/// (`n_max + 1` entries). A non-positive or NaN `alpha` selects the fitted step.
///
/// # Safety
/// `buffer` must be valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn drf_classical_fidelity_series(
    twice_j: u32,
    alpha: f64,
    n_max: u64,
    buffer: *mut f64,
    len: usize,
) -> DrfStatus {
    guard(|| {
        let s = spin(twice_j)?;
        let needed = usize::try_from(n_max).ok().and_then(|n| n.checked_add(1));
        if needed.is_none_or(|needed| len < needed) {
            return Err(fail(DrfStatus::BufferTooSmall, format!("buffer holds {len} values but n_max + 1 are needed")));
        }
        let alpha = if alpha > 0.0 { alpha } else { fitted_step(s) };
        let series = classical_fidelity_series(s, alpha, n_max).map_err(from_error)?;
        let values: Vec<f64> = series.entries.iter().map(|e| e.pipeline).collect();
        copy_out(&values, buffer, len)
    })
}

/// Residual of the best non-negative coherent-state fit to the frame after
/// `n` measurements, on a grid of `nodes` polar angles.
///
/// # Safety
/// `out` must be null or valid for one `double` write.
#[no_mangle]
pub unsafe extern "C" fn drf_convexity_residual(twice_j: u32, n: u64, nodes: usize, out: *mut f64) -> DrfStatus {
    guard(|| write_out(out, convexity_test(spin(twice_j)?, n, nodes).map_err(from_error)?.residual))
}
