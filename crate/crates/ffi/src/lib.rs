//! C interface to projlab.
//!
//! Sets and traces are opaque handles created from JSON descriptors and
//! released with their `_free` functions. Every call returns a
//! [`PlStatus`]; on failure the message is kept per thread and can be read
//! with [`pl_last_error`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use projlab::diagnostics::{reach_along, Reach};
use projlab::engine::{run_alternating, run_douglas_rachford, StopReason, Trace};
use projlab::error::Error;
use projlab::primitives::{Point, TiePolicy, Tolerances};
use projlab::sets::SetDescriptor;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PlStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidArgument = 3,
    DimensionMismatch = 4,
    NotInSet = 5,
    ProjectionFailed = 6,
    BufferTooSmall = 7,
    Panic = 8,
    Other = 9,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PlStopReason {
    MaxIter = 0,
    Stationary = 1,
    Diverged = 2,
}

/// Opaque set handle.
pub struct PlSet(SetDescriptor);

/// Opaque trace handle.
pub struct PlTrace(Trace);

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(e: &Error) -> PlStatus {
    match e {
        Error::DimensionMismatch { .. } => PlStatus::DimensionMismatch,
        Error::NotInSet { .. } => PlStatus::NotInSet,
        Error::Projection { .. } => PlStatus::ProjectionFailed,
        Error::InvalidParameter(_) | Error::NonFinite(_) | Error::Json(_) | Error::Config(_) => {
            PlStatus::InvalidArgument
        }
        _ => PlStatus::Other,
    }
}

fn fail(status: PlStatus, msg: impl Into<String>) -> PlStatus {
    set_error(msg.into());
    status
}

/// Runs `f`, recording errors and turning panics into [`PlStatus::Panic`].
fn guard(f: impl FnOnce() -> Result<(), PlStatus>) -> PlStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error(String::new());
            PlStatus::Ok
        }
        Ok(Err(s)) => s,
        Err(_) => fail(PlStatus::Panic, "internal panic"),
    }
}

fn check<T>(r: projlab::error::Result<T>) -> Result<T, PlStatus> {
    r.map_err(|e| fail(status_of(&e), e.to_string()))
}

unsafe fn nonnull<'a, T>(p: *const T, name: &str) -> Result<&'a T, PlStatus> {
    p.as_ref()
        .ok_or_else(|| fail(PlStatus::NullPointer, format!("{name} is null")))
}

unsafe fn point(p: *const f64, n: usize, name: &str) -> Result<Point, PlStatus> {
    if p.is_null() {
        return Err(fail(PlStatus::NullPointer, format!("{name} is null")));
    }
    check(Point::new(std::slice::from_raw_parts(p, n).to_vec()))
}

unsafe fn write_out(src: &[f64], out: *mut f64, out_len: usize) -> Result<(), PlStatus> {
    if out.is_null() {
        return Err(fail(PlStatus::NullPointer, "output buffer is null"));
    }
    if out_len < src.len() {
        return Err(fail(
            PlStatus::BufferTooSmall,
            format!("output buffer holds {out_len} values, need {}", src.len()),
        ));
    }
    ptr::copy_nonoverlapping(src.as_ptr(), out, src.len());
    Ok(())
}

/// Copies the last error message of this thread into `buf` (NUL
/// terminated, truncated to `len`). Returns the full message length.
///
/// # Safety
/// `buf` must be null or valid for `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn pl_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            ptr::copy_nonoverlapping(msg.as_ptr().cast::<c_char>(), buf, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Parses a JSON set descriptor.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn pl_set_from_json(json: *const c_char, out: *mut *mut PlSet) -> PlStatus {
    guard(|| {
        if json.is_null() || out.is_null() {
            return Err(fail(PlStatus::NullPointer, "json and out must be non-null"));
        }
        let text = CStr::from_ptr(json)
            .to_str()
            .map_err(|e| fail(PlStatus::InvalidUtf8, e.to_string()))?;
        let set = check(SetDescriptor::from_json(text))?;
        *out = Box::into_raw(Box::new(PlSet(set)));
        Ok(())
    })
}

/// # Safety
/// `set` must be null or a handle from [`pl_set_from_json`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn pl_set_free(set: *mut PlSet) {
    if !set.is_null() {
        drop(Box::from_raw(set));
    }
}

/// Ambient dimension of a set, or 0 for a null handle.
///
/// # Safety
/// `set` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn pl_set_dimension(set: *const PlSet) -> usize {
    set.as_ref().map_or(0, |s| s.0.dimension())
}

/// Projects `q` onto `set`, writing the chosen nearest point to `out`.
/// `distance` and `multivalued` may be null.
///
/// # Safety
/// `q` must hold `n` values and `out` room for `out_len`.
#[no_mangle]
pub unsafe extern "C" fn pl_set_project(
    set: *const PlSet,
    q: *const f64,
    n: usize,
    out: *mut f64,
    out_len: usize,
    distance: *mut f64,
    multivalued: *mut bool,
) -> PlStatus {
    guard(|| {
        let set = nonnull(set, "set")?;
        let q = point(q, n, "q")?;
        let p = check(set.0.project(&q))?;
        write_out(p.chosen().as_slice(), out, out_len)?;
        if let Some(d) = distance.as_mut() {
            *d = p.distance;
        }
        if let Some(m) = multivalued.as_mut() {
            *m = p.multivalued;
        }
        Ok(())
    })
}

fn tolerances(max_iter: usize) -> Result<Tolerances, PlStatus> {
    let tol = Tolerances::with_max_iter(max_iter);
    check(tol.validate())?;
    Ok(tol)
}

/// Alternating projections from `a0` (a point of the first set).
///
/// # Safety
/// Handles must be live, `a0` must hold `n` values and `out` be valid.
#[no_mangle]
pub unsafe extern "C" fn pl_run_alternating(
    a: *const PlSet,
    b: *const PlSet,
    a0: *const f64,
    n: usize,
    max_iter: usize,
    out: *mut *mut PlTrace,
) -> PlStatus {
    guard(|| {
        let (a, b) = (nonnull(a, "a")?, nonnull(b, "b")?);
        let a0 = point(a0, n, "a0")?;
        if out.is_null() {
            return Err(fail(PlStatus::NullPointer, "out is null"));
        }
        let trace = check(run_alternating(
            &a.0,
            &b.0,
            &a0,
            &tolerances(max_iter)?,
            &TiePolicy::first(),
        ))?;
        *out = Box::into_raw(Box::new(PlTrace(trace)));
        Ok(())
    })
}

/// Douglas-Rachford from `x0`. Trace record `k` holds the iterate and its
/// projection onto the second set.
///
/// # Safety
/// As for [`pl_run_alternating`].
#[no_mangle]
pub unsafe extern "C" fn pl_run_douglas_rachford(
    a: *const PlSet,
    b: *const PlSet,
    x0: *const f64,
    n: usize,
    max_iter: usize,
    out: *mut *mut PlTrace,
) -> PlStatus {
    guard(|| {
        let (a, b) = (nonnull(a, "a")?, nonnull(b, "b")?);
        let x0 = point(x0, n, "x0")?;
        if out.is_null() {
            return Err(fail(PlStatus::NullPointer, "out is null"));
        }
        let tol = tolerances(max_iter)?;
        let dr = check(run_douglas_rachford(&a.0, &b.0, &x0, &tol, &TiePolicy::first()))?;
        *out = Box::into_raw(Box::new(PlTrace(dr.to_trace(&tol))));
        Ok(())
    })
}

/// # Safety
/// `trace` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn pl_trace_free(trace: *mut PlTrace) {
    if !trace.is_null() {
        drop(Box::from_raw(trace));
    }
}

/// Number of records, or 0 for a null handle.
///
/// # Safety
/// `trace` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn pl_trace_len(trace: *const PlTrace) -> usize {
    trace.as_ref().map_or(0, |t| t.0.len())
}

/// Dimension of the trace points.
///
/// # Safety
/// `trace` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn pl_trace_dimension(trace: *const PlTrace) -> usize {
    trace.as_ref().map_or(0, |t| t.0.start.dim())
}

/// # Safety
/// `trace` must be a live handle and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn pl_trace_stop_reason(trace: *const PlTrace, out: *mut PlStopReason) -> PlStatus {
    guard(|| {
        let t = nonnull(trace, "trace")?;
        let out = out.as_mut().ok_or_else(|| fail(PlStatus::NullPointer, "out is null"))?;
        *out = match t.0.stop_reason {
            StopReason::MaxIter => PlStopReason::MaxIter,
            StopReason::Stationary => PlStopReason::Stationary,
            StopReason::Diverged => PlStopReason::Diverged,
        };
        Ok(())
    })
}

/// Copies record `index` (0-based): its two points and the distance
/// between them. Any of `a`, `b` and `r` may be null to skip it.
///
/// # Safety
/// `a` and `b` must be null or hold `len` values.
#[no_mangle]
pub unsafe extern "C" fn pl_trace_record(
    trace: *const PlTrace,
    index: usize,
    a: *mut f64,
    b: *mut f64,
    len: usize,
    r: *mut f64,
) -> PlStatus {
    guard(|| {
        let t = nonnull(trace, "trace")?;
        let rec = t.0.records.get(index).ok_or_else(|| {
            fail(
                PlStatus::InvalidArgument,
                format!("record {index} out of range (len {})", t.0.len()),
            )
        })?;
        if !a.is_null() {
            write_out(rec.a.as_slice(), a, len)?;
        }
        if !b.is_null() {
            write_out(rec.b.as_slice(), b, len)?;
        }
        if let Some(r) = r.as_mut() {
            *r = rec.r;
        }
        Ok(())
    })
}

/// Reach of `set` at `b` along the unit direction `d`. When no obstruction
/// is found up to `r_max`, `*infinite` is set and `*value` is `r_max`.
///
/// # Safety
/// `b` and `d` must hold `n` values; `value` and `infinite` must be valid.
#[no_mangle]
pub unsafe extern "C" fn pl_reach(
    set: *const PlSet,
    b: *const f64,
    d: *const f64,
    n: usize,
    r_max: f64,
    tol: f64,
    value: *mut f64,
    infinite: *mut bool,
) -> PlStatus {
    guard(|| {
        let set = nonnull(set, "set")?;
        let (b, d) = (point(b, n, "b")?, point(d, n, "d")?);
        if value.is_null() || infinite.is_null() {
            return Err(fail(PlStatus::NullPointer, "value and infinite must be non-null"));
        }
        match check(reach_along(&set.0, &b, &d, r_max, tol))? {
            Reach::Finite { value: v } => {
                *value = v;
                *infinite = false;
            }
            Reach::Infinite { r_max } => {
                *value = r_max;
                *infinite = true;
            }
        }
        Ok(())
    })
}
