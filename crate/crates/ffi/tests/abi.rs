use std::ffi::{c_char, CStr, CString};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use marstrand::*;

fn last_error() -> String {
    let p = mst_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_str().unwrap().to_owned()
}

fn take_string(p: *mut c_char) -> String {
    let s = unsafe { CStr::from_ptr(p) }.to_str().unwrap().to_owned();
    unsafe { mst_string_free(p) };
    s
}

/// The strings and the pointer array into them, kept alive together.
struct Conds(#[allow(dead_code)] Vec<CString>, Vec<*const c_char>);

fn conds(specs: &[&str]) -> Conds {
    let owned: Vec<CString> = specs.iter().map(|s| CString::new(*s).unwrap()).collect();
    let ptrs = owned.iter().map(|c| c.as_ptr()).collect();
    Conds(owned, ptrs)
}

#[test]
fn zero_coding_round_trip() {
    let c = conds(&["1/2"]);
    let sched = CString::new("paper").unwrap();
    let mut b = ptr::null_mut();
    let st = unsafe { mst_build_zero_coding(sched.as_ptr(), 4, c.1.as_ptr(), 1, 7, 1 << 20, &mut b) };
    assert_eq!(st, MstStatus::Ok);
    let mut len = 0;
    assert_eq!(unsafe { mst_build_len(b, &mut len) }, MstStatus::Ok);
    assert_eq!(len, 65536);

    let mut text = ptr::null_mut();
    assert_eq!(unsafe { mst_build_text(b, &mut text) }, MstStatus::Ok);
    let text = take_string(text);
    assert!(text.starts_with("len:65536;bits:"));
    let mut bits = vec![9u8; 16];
    assert_eq!(unsafe { mst_build_copy_bits(b, 65520, 16, bits.as_mut_ptr()) }, MstStatus::Ok);
    let tail: String = bits.iter().map(|&b| char::from(b'0' + b)).collect();
    assert!(text.ends_with(&tail));

    let mut r = ptr::null_mut();
    assert_eq!(unsafe { mst_build_audit(b, 0, &mut r) }, MstStatus::Ok);
    let mut passed = false;
    assert_eq!(unsafe { mst_report_passed(r, &mut passed) }, MstStatus::Ok);
    assert!(passed);
    let mut json = ptr::null_mut();
    assert_eq!(unsafe { mst_report_json(r, &mut json) }, MstStatus::Ok);
    let v: serde_json::Value = serde_json::from_str(&take_string(json)).unwrap();
    assert_eq!(v["x_len"], 65536);
    let mut trace = ptr::null_mut();
    assert_eq!(unsafe { mst_build_trace_json(b, &mut trace) }, MstStatus::Ok);
    assert_eq!(serde_json::from_str::<serde_json::Value>(&take_string(trace)).unwrap().as_array().unwrap().len(), 4);
    unsafe {
        mst_report_free(r);
        mst_build_free(b);
    }
}

#[test]
fn block_coding_and_audit() {
    let c = conds(&["3/7", "1/2"]);
    let (sched, eps) = (CString::new("scaled:8").unwrap(), CString::new("1/2").unwrap());
    let mut b = ptr::null_mut();
    let st = unsafe { mst_build_block_coding(sched.as_ptr(), 4, c.1.as_ptr(), 2, eps.as_ptr(), 3, 1, 1 << 20, &mut b) };
    assert_eq!(st, MstStatus::Ok);
    let mut r = ptr::null_mut();
    assert_eq!(unsafe { mst_build_audit(b, 1 << 16, &mut r) }, MstStatus::Ok);
    let (mut passed, mut mism) = (false, 1);
    unsafe {
        mst_report_passed(r, &mut passed);
        mst_report_decode_mismatches(r, &mut mism);
    }
    assert!(passed);
    assert_eq!(mism, 0);
    unsafe {
        mst_report_free(r);
        mst_build_free(b);
    }
}

#[test]
fn errors_are_reported() {
    let c = conds(&["1/2"]);
    let bad = CString::new("scaled:3").unwrap();
    let mut b = ptr::null_mut();
    let st = unsafe { mst_build_zero_coding(bad.as_ptr(), 2, c.1.as_ptr(), 1, 0, 1024, &mut b) };
    assert_ne!(st, MstStatus::Ok);
    assert!(b.is_null());
    assert!(last_error().contains("scaled"));

    let paper = CString::new("paper").unwrap();
    let st = unsafe { mst_build_zero_coding(paper.as_ptr(), 6, c.1.as_ptr(), 1, 0, 1024, &mut b) };
    assert_eq!(st, MstStatus::ScheduleOverflow);

    let st = unsafe { mst_build_zero_coding(ptr::null(), 2, c.1.as_ptr(), 1, 0, 1024, &mut b) };
    assert_eq!(st, MstStatus::NullPointer);
    let st = unsafe { mst_build_zero_coding(paper.as_ptr(), 2, c.1.as_ptr(), 0, 0, 1024, &mut b) };
    assert_eq!(st, MstStatus::InvalidArgument);
    let bad_cond = conds(&["7/5"]);
    let st = unsafe { mst_build_zero_coding(paper.as_ptr(), 2, bad_cond.1.as_ptr(), 1, 0, 1024, &mut b) };
    assert_ne!(st, MstStatus::Ok);

    let eps = CString::new("2/x").unwrap();
    let st = unsafe { mst_build_block_coding(paper.as_ptr(), 2, c.1.as_ptr(), 1, eps.as_ptr(), 0, 0, 1 << 20, &mut b) };
    assert_eq!(st, MstStatus::Parse);

    let mut len = 0;
    assert_eq!(unsafe { mst_build_len(ptr::null(), &mut len) }, MstStatus::NullPointer);

    // a successful call clears the message
    let mut n = 0;
    assert_eq!(unsafe { mst_count_dyadics_in_ball(1, 1, -3, 2, 4, &mut n) }, MstStatus::Ok);
    assert!(mst_last_error().is_null());
}

#[test]
fn out_of_range_copy() {
    let c = conds(&["1/2"]);
    let paper = CString::new("paper").unwrap();
    let mut b = ptr::null_mut();
    assert_eq!(unsafe { mst_build_zero_coding(paper.as_ptr(), 2, c.1.as_ptr(), 1, 0, 1024, &mut b) }, MstStatus::Ok);
    let mut buf = [0u8; 8];
    assert_eq!(unsafe { mst_build_copy_bits(b, 60, 8, buf.as_mut_ptr()) }, MstStatus::OutOfRange);
    assert_eq!(unsafe { mst_build_copy_bits(b, u64::MAX, 2, buf.as_mut_ptr()) }, MstStatus::OutOfRange);
    unsafe { mst_build_free(b) };
    unsafe { mst_build_free(ptr::null_mut()) };
}

#[test]
fn helpers() {
    let zeros = vec![0u8; 1000];
    let mut k = 0;
    assert_eq!(unsafe { mst_lz_estimate(zeros.as_ptr(), zeros.len(), &mut k) }, MstStatus::Ok);
    assert!(k < 20);
    assert_eq!(unsafe { mst_lz_estimate(ptr::null(), 0, &mut k) }, MstStatus::Ok);
    assert_eq!(k, 0);
    let mut n = 0;
    assert_eq!(unsafe { mst_count_dyadics_in_ball(0, 0, 0, 0, 0, &mut n) }, MstStatus::Ok);
    // |z| < 1 + √2 around the origin: 21 lattice points
    assert_eq!(n, 21);
    let v = unsafe { CStr::from_ptr(mst_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

fn target_dir() -> PathBuf {
    let manifest = Path::new(env!("CARGO_MANIFEST_DIR"));
    std::env::var_os("CARGO_TARGET_DIR").map(PathBuf::from).unwrap_or_else(|| manifest.join("../../target"))
}

#[test]
fn header_compiles_and_links() {
    let manifest = Path::new(env!("CARGO_MANIFEST_DIR"));
    let header = manifest.join("include/marstrand.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for f in ["mst_build_zero_coding", "mst_build_block_coding", "mst_last_error", "mst_string_free", "MST_STATUS_PANIC"] {
        assert!(text.contains(f), "{f} missing from the header");
    }
    let Ok(cc) = which_cc() else {
        eprintln!("no C compiler found; header not compiled");
        return;
    };
    let src = manifest.join("tests/c/smoke.c");
    let include = manifest.join("include");
    let st = Command::new(&cc).args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I"]).arg(&include).arg(&src).status().unwrap();
    assert!(st.success(), "header does not compile as C99");

    let lib = target_dir().join(if cfg!(debug_assertions) { "debug" } else { "release" }).join("libmarstrand.a");
    if !lib.exists() {
        eprintln!("{} not built; link step skipped", lib.display());
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let exe = dir.path().join("smoke");
    let st = Command::new(&cc)
        .arg("-I")
        .arg(&include)
        .arg(&src)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .unwrap();
    assert!(st.success(), "smoke program failed to link");
    let out = Command::new(&exe).output().unwrap();
    assert!(out.status.success(), "{}{}", String::from_utf8_lossy(&out.stdout), String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).contains("passed=1 mismatches=0"));
}

fn which_cc() -> Result<String, ()> {
    for cc in ["cc", "gcc", "clang"] {
        if Command::new(cc).arg("--version").output().is_ok_and(|o| o.status.success()) {
            return Ok(cc.to_string());
        }
    }
    Err(())
}
