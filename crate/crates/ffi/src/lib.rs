//! C ABI over `marstrand-core`.
//!
//! Every function returns an [`MstStatus`]; on failure the message is kept
//! per thread and read with [`mst_last_error`]. Builds and reports are opaque
//! handles released with their `_free` function. Strings handed out by the
//! library are released with [`mst_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use marstrand_core::audit::{lz_estimate, verify_thm1, verify_thm2, AuditOptions, AuditReport};
use marstrand_core::construct::{
    build_thm1, build_thm2, Condition, PrngBits, Ratio, Schedule, TargetSequence, Thm1Build, Thm2Build,
};
use marstrand_core::geometry::count_dyadics_in_ball;
use marstrand_core::{BitString, Dyadic, Error};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MstStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidArgument = 3,
    Parse = 4,
    ScheduleOverflow = 5,
    PrecisionExhausted = 6,
    DecodeMismatch = 7,
    OutOfRange = 8,
    Io = 9,
    Panic = 10,
}

impl From<&Error> for MstStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::Parse(_) => MstStatus::Parse,
            Error::ScheduleOverflow(_) | Error::NoRoom { .. } | Error::BlockOverflow { .. } => MstStatus::ScheduleOverflow,
            Error::PrecisionExhausted { .. } | Error::UndeterminedBits { .. } => MstStatus::PrecisionExhausted,
            Error::DecodeMismatch { .. } => MstStatus::DecodeMismatch,
            Error::Io(_) => MstStatus::Io,
            _ => MstStatus::InvalidArgument,
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Fail(MstStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(MstStatus::from(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(MstStatus::NullPointer, format!("{what} is null"))
}

/// Runs `f`, turning errors and panics into a status plus a stored message.
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> MstStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            MstStatus::Ok
        }
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal panic: {msg}"));
            MstStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| Fail(MstStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

unsafe fn out_ref<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn conditions(conds: *const *const c_char, n: usize) -> Result<Vec<Condition>, Fail> {
    if n == 0 {
        return Err(Fail(MstStatus::InvalidArgument, "at least one condition is required".into()));
    }
    if conds.is_null() {
        return Err(null("conds"));
    }
    let specs = (0..n).map(|i| str_arg(*conds.add(i), "condition")).collect::<Result<Vec<_>, _>>()?;
    Ok(Condition::parse_all(&specs)?)
}

enum Built {
    Zero(Thm1Build),
    Block(Thm2Build),
}

/// A finished build with everything needed to audit it.
pub struct MstBuild {
    built: Built,
    conditions: Vec<Condition>,
    oracle: PrngBits,
    phi: PrngBits,
    target: Option<TargetSequence>,
}

impl MstBuild {
    fn x(&self) -> &BitString {
        match &self.built {
            Built::Zero(b) => &b.x,
            Built::Block(b) => &b.x,
        }
    }
}

/// An audit report.
pub struct MstReport(AuditReport);

/// The library version, a static string.
#[no_mangle]
pub extern "C" fn mst_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// The message of the last failed call on this thread, or null. Valid until
/// the next call into the library from the same thread.
#[no_mangle]
pub extern "C" fn mst_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Zero-coding build. `schedule` is `"paper"` or `"scaled:B"`; `conds` holds
/// `n_conds` multiplier specs.
///
/// # Safety
/// Pointers must be valid for their stated lengths; strings NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn mst_build_zero_coding(
    schedule: *const c_char,
    stages: u64,
    conds: *const *const c_char,
    n_conds: usize,
    oracle_seed: u64,
    bit_budget: u64,
    out: *mut *mut MstBuild,
) -> MstStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        let sched = Schedule::parse_for(str_arg(schedule, "schedule")?, 1)?;
        let conditions = conditions(conds, n_conds)?;
        let oracle = PrngBits::new(oracle_seed);
        let b = build_thm1(&oracle, &conditions, sched, stages, bit_budget)?;
        let h = MstBuild { built: Built::Zero(b), conditions, oracle, phi: PrngBits::with_stream(0, 1), target: None };
        *out = Box::into_raw(Box::new(h));
        Ok(())
    })
}

/// Block-coding build with a target of density `eps` (`"p/q"`).
///
/// # Safety
/// As for [`mst_build_zero_coding`].
#[no_mangle]
pub unsafe extern "C" fn mst_build_block_coding(
    schedule: *const c_char,
    stages: u64,
    conds: *const *const c_char,
    n_conds: usize,
    eps: *const c_char,
    seed: u64,
    oracle_seed: u64,
    bit_budget: u64,
    out: *mut *mut MstBuild,
) -> MstStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        let sched = Schedule::parse_for(str_arg(schedule, "schedule")?, 2)?;
        let conditions = conditions(conds, n_conds)?;
        let eps: Ratio = str_arg(eps, "eps")?.parse()?;
        let (oracle, phi) = (PrngBits::new(oracle_seed), PrngBits::with_stream(seed, 1));
        let target = TargetSequence::new(eps, seed);
        let b = build_thm2(&oracle, &phi, &conditions, &target, sched, stages, bit_budget)?;
        let h = MstBuild { built: Built::Block(b), conditions, oracle, phi, target: Some(target) };
        *out = Box::into_raw(Box::new(h));
        Ok(())
    })
}

/// # Safety
/// `build` must come from a build function and not be freed yet.
#[no_mangle]
pub unsafe extern "C" fn mst_build_len(build: *const MstBuild, out: *mut u64) -> MstStatus {
    guard(|| {
        let b = build.as_ref().ok_or_else(|| null("build"))?;
        *out_ref(out, "out")? = b.x().len() as u64;
        Ok(())
    })
}

/// Copies bits `start .. start + len` of `x` into `buf`, one byte (0 or 1) per bit.
///
/// # Safety
/// `buf` must hold `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn mst_build_copy_bits(build: *const MstBuild, start: u64, len: u64, buf: *mut u8) -> MstStatus {
    guard(|| {
        let b = build.as_ref().ok_or_else(|| null("build"))?;
        if buf.is_null() {
            return Err(null("buf"));
        }
        let x = b.x();
        let end = start.checked_add(len).filter(|&e| e <= x.len() as u64).ok_or_else(|| {
            Fail(MstStatus::OutOfRange, format!("bits {start}..{start}+{len} exceed length {}", x.len()))
        })?;
        for (i, p) in (start..end).enumerate() {
            *buf.add(i) = u8::from(x.get(p as usize));
        }
        Ok(())
    })
}

/// `x` in the `len:N;bits:…` text form; release with [`mst_string_free`].
///
/// # Safety
/// `build` must be live; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn mst_build_text(build: *const MstBuild, out: *mut *mut c_char) -> MstStatus {
    guard(|| {
        let b = build.as_ref().ok_or_else(|| null("build"))?;
        *out_ref(out, "out")? = CString::new(b.x().to_text()).unwrap().into_raw();
        Ok(())
    })
}

/// The stage traces as JSON; release with [`mst_string_free`].
///
/// # Safety
/// `build` must be live; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn mst_build_trace_json(build: *const MstBuild, out: *mut *mut c_char) -> MstStatus {
    guard(|| {
        let b = build.as_ref().ok_or_else(|| null("build"))?;
        let json = match &b.built {
            Built::Zero(t) => serde_json::to_string(&t.traces),
            Built::Block(t) => serde_json::to_string(&t.traces),
        }
        .map_err(Error::from)?;
        *out_ref(out, "out")? = CString::new(json).unwrap().into_raw();
        Ok(())
    })
}

/// Audits the build. `max_profile_len = 0` keeps the default density cap.
///
/// # Safety
/// `build` must be live; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn mst_build_audit(build: *const MstBuild, max_profile_len: u64, out: *mut *mut MstReport) -> MstStatus {
    guard(|| {
        let b = build.as_ref().ok_or_else(|| null("build"))?;
        let out = out_ref(out, "out")?;
        let mut opts = AuditOptions::default();
        if max_profile_len > 0 {
            opts.max_profile_len = max_profile_len;
        }
        let r = match &b.built {
            Built::Zero(t) => verify_thm1(t, &b.conditions, Some(&b.oracle), &opts)?,
            Built::Block(t) => {
                let target = b.target.as_ref().expect("block build keeps its target");
                verify_thm2(t, &b.conditions, target, Some(&b.oracle), Some(&b.phi), &opts)?
            }
        };
        *out = Box::into_raw(Box::new(MstReport(r)));
        Ok(())
    })
}

/// # Safety
/// `report` must be live; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn mst_report_passed(report: *const MstReport, out: *mut bool) -> MstStatus {
    guard(|| {
        let r = report.as_ref().ok_or_else(|| null("report"))?;
        *out_ref(out, "out")? = r.0.passed;
        Ok(())
    })
}

/// Number of decoded bits that disagree with the target.
///
/// # Safety
/// `report` must be live; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn mst_report_decode_mismatches(report: *const MstReport, out: *mut u64) -> MstStatus {
    guard(|| {
        let r = report.as_ref().ok_or_else(|| null("report"))?;
        *out_ref(out, "out")? = r.0.decode_mismatches;
        Ok(())
    })
}

/// The full report as JSON; release with [`mst_string_free`].
///
/// # Safety
/// `report` must be live; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn mst_report_json(report: *const MstReport, out: *mut *mut c_char) -> MstStatus {
    guard(|| {
        let r = report.as_ref().ok_or_else(|| null("report"))?;
        let json = serde_json::to_string_pretty(&r.0).map_err(Error::from)?;
        *out_ref(out, "out")? = CString::new(json).unwrap().into_raw();
        Ok(())
    })
}

/// The LZ76 estimate `c·⌈log₂(c + 1)⌉` of `len` bits, one byte per bit.
///
/// # Safety
/// `bits` must hold `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn mst_lz_estimate(bits: *const u8, len: usize, out: *mut u64) -> MstStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        let s = if len == 0 {
            BitString::new()
        } else {
            if bits.is_null() {
                return Err(null("bits"));
            }
            BitString::from_bools(std::slice::from_raw_parts(bits, len).iter().map(|&b| b != 0))
        };
        *out = lz_estimate(&s);
        Ok(())
    })
}

/// Points `2^-level·z` in the open ball of radius `2^-level(1 + √2)` about
/// `(x_num/2^x_exp, y_num/2^y_exp)`.
///
/// # Safety
/// `out` writable.
#[no_mangle]
pub unsafe extern "C" fn mst_count_dyadics_in_ball(
    x_num: i64,
    x_exp: u64,
    y_num: i64,
    y_exp: u64,
    level: u64,
    out: *mut u64,
) -> MstStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        let a = (Dyadic::new(num_bigint::BigInt::from(x_num), x_exp), Dyadic::new(num_bigint::BigInt::from(y_num), y_exp));
        *out = count_dyadics_in_ball(&a, level);
        Ok(())
    })
}

/// # Safety
/// `build` must come from a build function, or be null.
#[no_mangle]
pub unsafe extern "C" fn mst_build_free(build: *mut MstBuild) {
    if !build.is_null() {
        drop(Box::from_raw(build));
    }
}

/// # Safety
/// `report` must come from [`mst_build_audit`], or be null.
#[no_mangle]
pub unsafe extern "C" fn mst_report_free(report: *mut MstReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// # Safety
/// `s` must be a string returned by this library, or null.
#[no_mangle]
pub unsafe extern "C" fn mst_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
