use std::ffi::CString;
use std::path::Path;
use std::process::Command;
use std::ptr;

use projlab_ffi::*;

fn set(json: &str) -> *mut PlSet {
    let text = CString::new(json).unwrap();
    let mut out = ptr::null_mut();
    assert_eq!(unsafe { pl_set_from_json(text.as_ptr(), &mut out) }, PlStatus::Ok);
    out
}

fn last_error() -> String {
    let mut buf = vec![0u8; 256];
    let n = unsafe { pl_last_error(buf.as_mut_ptr().cast(), buf.len()) };
    buf.truncate(n.min(255));
    String::from_utf8(buf).unwrap()
}

const AXIS: &str = r#"{"family": "affine", "origin": [0.0, 0.0], "directions": [[1.0, 0.0]]}"#;
const CIRCLE: &str = r#"{"family": "sphere-product", "m": [1.0]}"#;

#[test]
fn project_onto_circle() {
    let s = set(CIRCLE);
    assert_eq!(unsafe { pl_set_dimension(s) }, 2);
    let mut out = [0.0; 2];
    let (mut d, mut mv) = (0.0, true);
    let q = [3.0, 4.0];
    let st = unsafe { pl_set_project(s, q.as_ptr(), 2, out.as_mut_ptr(), 2, &mut d, &mut mv) };
    assert_eq!(st, PlStatus::Ok);
    assert!((out[0] - 0.6).abs() < 1e-15 && (out[1] - 0.8).abs() < 1e-15);
    assert!((d - 4.0).abs() < 1e-15 && !mv);

    let origin = [0.0, 0.0];
    let st = unsafe { pl_set_project(s, origin.as_ptr(), 2, out.as_mut_ptr(), 2, ptr::null_mut(), &mut mv) };
    assert_eq!(st, PlStatus::Ok);
    assert!(mv);
    unsafe { pl_set_free(s) };
}

#[test]
fn errors_are_reported() {
    let s = set(CIRCLE);
    let q = [1.0, 0.0, 0.0];
    let mut out = [0.0; 3];
    let st = unsafe { pl_set_project(s, q.as_ptr(), 3, out.as_mut_ptr(), 3, ptr::null_mut(), ptr::null_mut()) };
    assert_eq!(st, PlStatus::DimensionMismatch);
    assert!(last_error().contains("dimension"), "{}", last_error());

    let st = unsafe { pl_set_project(s, q.as_ptr(), 2, out.as_mut_ptr(), 1, ptr::null_mut(), ptr::null_mut()) };
    assert_eq!(st, PlStatus::BufferTooSmall);

    let bad = CString::new(r#"{"family": "nope"}"#).unwrap();
    let mut h = ptr::null_mut();
    assert_eq!(
        unsafe { pl_set_from_json(bad.as_ptr(), &mut h) },
        PlStatus::InvalidArgument
    );
    assert!(h.is_null());
    assert_eq!(unsafe { pl_set_from_json(ptr::null(), &mut h) }, PlStatus::NullPointer);
    unsafe { pl_set_free(s) };
}

#[test]
fn alternating_run_and_records() {
    let a = set(AXIS);
    let b = set(r#"{"family": "epigraph-quadratic", "a0": 1.0, "a2": 1.0}"#);
    let start = [1.0, 0.0];
    let mut t = ptr::null_mut();
    assert_eq!(
        unsafe { pl_run_alternating(a, b, start.as_ptr(), 2, 1000, &mut t) },
        PlStatus::Ok
    );
    let len = unsafe { pl_trace_len(t) };
    assert!(len > 10 && len < 1000);
    let mut stop = PlStopReason::MaxIter;
    assert_eq!(unsafe { pl_trace_stop_reason(t, &mut stop) }, PlStatus::Ok);
    assert_eq!(stop, PlStopReason::Stationary);
    let (mut pa, mut pb, mut r) = ([0.0; 2], [0.0; 2], 0.0);
    let st = unsafe { pl_trace_record(t, len - 1, pa.as_mut_ptr(), pb.as_mut_ptr(), 2, &mut r) };
    assert_eq!(st, PlStatus::Ok);
    assert!((r - 1.0).abs() < 1e-9 && pa[0].abs() < 1e-6 && (pb[1] - 1.0).abs() < 1e-9);
    assert_eq!(
        unsafe { pl_trace_record(t, len, pa.as_mut_ptr(), ptr::null_mut(), 2, ptr::null_mut()) },
        PlStatus::InvalidArgument
    );
    unsafe {
        pl_trace_free(t);
        pl_set_free(a);
        pl_set_free(b);
    }
}

#[test]
fn douglas_rachford_and_reach() {
    let c = set(CIRCLE);
    let l = set(r#"{"family": "affine", "origin": [0.0, 0.5], "directions": [[1.0, 0.0]]}"#);
    let x0 = [2.0, 2.0];
    let mut t = ptr::null_mut();
    assert_eq!(
        unsafe { pl_run_douglas_rachford(c, l, x0.as_ptr(), 2, 500, &mut t) },
        PlStatus::Ok
    );
    assert_eq!(unsafe { pl_trace_dimension(t) }, 2);
    unsafe { pl_trace_free(t) };

    let (b, inward, outward) = ([1.0, 0.0], [-1.0, 0.0], [1.0, 0.0]);
    let (mut v, mut inf) = (0.0, true);
    let st = unsafe { pl_reach(c, b.as_ptr(), inward.as_ptr(), 2, 100.0, 1e-10, &mut v, &mut inf) };
    assert_eq!(st, PlStatus::Ok);
    assert!(!inf && (v - 1.0).abs() < 1e-8);
    let st = unsafe { pl_reach(c, b.as_ptr(), outward.as_ptr(), 2, 100.0, 1e-10, &mut v, &mut inf) };
    assert_eq!(st, PlStatus::Ok);
    assert!(inf && v == 100.0);
    let off = [2.0, 0.0];
    let st = unsafe { pl_reach(c, off.as_ptr(), inward.as_ptr(), 2, 100.0, 1e-10, &mut v, &mut inf) };
    assert_eq!(st, PlStatus::NotInSet);
    unsafe {
        pl_set_free(c);
        pl_set_free(l);
    }
}

#[test]
fn header_compiles_as_c() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/projlab.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for f in [
        "pl_set_from_json",
        "pl_run_alternating",
        "pl_reach",
        "pl_last_error",
        "PL_STATUS_NOT_IN_SET",
    ] {
        assert!(text.contains(f), "{f} missing from header");
    }
    let Ok(status) = Command::new("cc")
        .args(["-fsyntax-only", "-Wall", "-Werror", "-x", "c"])
        .arg(&header)
        .status()
    else {
        eprintln!("no C compiler found; syntax check skipped");
        return;
    };
    assert!(status.success());
}
