//! C interface to the laboratory.
//!
//! Experiments are described by an opaque `VwlabConfig` handle and produce an
//! opaque `VwlabReport` handle; reports are read back as JSON strings. Every
//! fallible call returns a `VwlabStatus`; the message for the last failure on
//! the calling thread is available from `vwlab_last_error`.
//!
//! The dense spectrum uses the system OpenBLAS. On AVX-512 machines set
//! `OPENBLAS_CORETYPE=Haswell` before the library is loaded; a wrong kernel is
//! detected and reported as `VWLAB_STATUS_NUMERICAL`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use vwlab::cli::{run, Command, ExperimentConfig, Report, REPORT_SCHEMA};
use vwlab::lemmas::{run_lemma, LemmaId};
use vwlab::VwError;

/// Result codes.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VwlabStatus {
    Ok = 0,
    /// The run finished but a check missed its threshold.
    CheckFailed = 1,
    /// Null pointer, bad UTF-8 or unknown name.
    InvalidArgument = 2,
    /// A setting failed validation.
    InvalidConfig = 3,
    /// Linear algebra or shape failure.
    Numerical = 4,
    Io = 5,
    /// A Rust panic was caught at the boundary.
    Panic = 6,
}

/// Experiment settings.
pub struct VwlabConfig {
    inner: ExperimentConfig,
}

/// Finished experiment.
pub struct VwlabReport {
    inner: Report,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &VwError) -> VwlabStatus {
    match e {
        VwError::InvalidConfig(_) => VwlabStatus::InvalidConfig,
        VwError::Io(_) => VwlabStatus::Io,
        _ => VwlabStatus::Numerical,
    }
}

fn guard(f: impl FnOnce() -> Result<VwlabStatus, (VwlabStatus, String)>) -> VwlabStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(s)) => s,
        Ok(Err((s, msg))) => {
            set_error(&msg);
            s
        }
        Err(_) => {
            set_error("internal panic");
            VwlabStatus::Panic
        }
    }
}

fn invalid(msg: &str) -> (VwlabStatus, String) {
    (VwlabStatus::InvalidArgument, msg.to_string())
}

fn lib_err(e: VwError) -> (VwlabStatus, String) {
    (status_of(&e), e.to_string())
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, (VwlabStatus, String)> {
    if p.is_null() {
        return Err(invalid(&format!("{what} is null")));
    }
    CStr::from_ptr(p).to_str().map_err(|_| invalid(&format!("{what} is not UTF-8")))
}

fn to_c(s: String) -> *mut c_char {
    CString::new(s).map(CString::into_raw).unwrap_or(ptr::null_mut())
}

/// Message for the last failed call on this thread. Valid until the next call.
#[no_mangle]
pub extern "C" fn vwlab_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Report schema tag, a static string.
#[no_mangle]
pub extern "C" fn vwlab_schema_version() -> *const c_char {
    static V: &CStr = c"vwlab-report/1";
    debug_assert_eq!(V.to_str().ok(), Some(REPORT_SCHEMA));
    V.as_ptr()
}

/// New configuration with the defaults of `command`
/// (`verify-lemmas`, `check-identities`, `solve`, `spectrum`, `convergence`).
///
/// # Safety
/// `command` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn vwlab_config_new(command: *const c_char, out: *mut *mut VwlabConfig) -> VwlabStatus {
    guard(|| {
        if out.is_null() {
            return Err(invalid("out is null"));
        }
        let name = str_arg(command, "command")?;
        let cmd: Command = name.parse().map_err(|_| invalid(&format!("unknown command '{name}'")))?;
        *out = Box::into_raw(Box::new(VwlabConfig {
            inner: ExperimentConfig::defaults(cmd),
        }));
        Ok(VwlabStatus::Ok)
    })
}

/// Apply one `key = value` setting, with the same keys as the config file.
///
/// # Safety
/// `cfg` must come from `vwlab_config_new`; strings must be NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn vwlab_config_set(
    cfg: *mut VwlabConfig,
    key: *const c_char,
    value: *const c_char,
) -> VwlabStatus {
    guard(|| {
        let cfg = cfg.as_mut().ok_or_else(|| invalid("config is null"))?;
        let k = str_arg(key, "key")?;
        let v = str_arg(value, "value")?;
        cfg.inner.set(k, v).map_err(lib_err)?;
        Ok(VwlabStatus::Ok)
    })
}

/// # Safety
/// `cfg` must come from `vwlab_config_new` or be null.
#[no_mangle]
pub unsafe extern "C" fn vwlab_config_free(cfg: *mut VwlabConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

/// Run the experiment. On `VWLAB_STATUS_OK` and `VWLAB_STATUS_CHECK_FAILED`
/// a report is stored in `out`; otherwise `out` is set to null.
///
/// # Safety
/// `cfg` must come from `vwlab_config_new`; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn vwlab_run(cfg: *const VwlabConfig, out: *mut *mut VwlabReport) -> VwlabStatus {
    guard(|| {
        if out.is_null() {
            return Err(invalid("out is null"));
        }
        *out = ptr::null_mut();
        let cfg = cfg.as_ref().ok_or_else(|| invalid("config is null"))?;
        let report = run(&cfg.inner).map_err(lib_err)?;
        let status = match &report.failing_check {
            None => VwlabStatus::Ok,
            Some(name) => {
                set_error(&format!("check failed: {name}"));
                VwlabStatus::CheckFailed
            }
        };
        *out = Box::into_raw(Box::new(VwlabReport { inner: report }));
        Ok(status)
    })
}

/// Report as JSON; free with `vwlab_string_free`. Null on failure.
///
/// # Safety
/// `report` must come from `vwlab_run`.
#[no_mangle]
pub unsafe extern "C" fn vwlab_report_json(report: *const VwlabReport) -> *mut c_char {
    let Some(r) = report.as_ref() else {
        set_error("report is null");
        return ptr::null_mut();
    };
    match r.inner.to_json() {
        Ok(s) => to_c(s),
        Err(e) => {
            set_error(&e.to_string());
            ptr::null_mut()
        }
    }
}

/// # Safety
/// `report` must come from `vwlab_run`.
#[no_mangle]
pub unsafe extern "C" fn vwlab_report_passed(report: *const VwlabReport) -> bool {
    report.as_ref().is_some_and(|r| r.inner.passed)
}

/// Name of the first failing check, or null. Free with `vwlab_string_free`.
///
/// # Safety
/// `report` must come from `vwlab_run`.
#[no_mangle]
pub unsafe extern "C" fn vwlab_report_failing_check(report: *const VwlabReport) -> *mut c_char {
    match report.as_ref().and_then(|r| r.inner.failing_check.clone()) {
        Some(s) => to_c(s),
        None => ptr::null_mut(),
    }
}

/// # Safety
/// `report` must come from `vwlab_run` or be null.
#[no_mangle]
pub unsafe extern "C" fn vwlab_report_free(report: *mut VwlabReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// # Safety
/// `s` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn vwlab_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Run one pointwise lemma check (`lemma` 1, 2, 3 for the three lemmas,
/// 4 for the radial identities) on `samples` seeded inputs.
///
/// # Safety
/// `max_err` and `failures` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn vwlab_lemma_run(
    lemma: u32,
    seed: u64,
    samples: u64,
    max_err: *mut f64,
    failures: *mut u64,
) -> VwlabStatus {
    guard(|| {
        if max_err.is_null() || failures.is_null() {
            return Err(invalid("output pointer is null"));
        }
        let id = match lemma {
            1 => LemmaId::A1,
            2 => LemmaId::A2,
            3 => LemmaId::A3,
            4 => LemmaId::Radial,
            _ => return Err(invalid(&format!("unknown lemma {lemma}"))),
        };
        let r = run_lemma(id, seed, samples);
        *max_err = r.max_det_relative_error;
        *failures = r.failures;
        Ok(if r.failures == 0 {
            VwlabStatus::Ok
        } else {
            VwlabStatus::CheckFailed
        })
    })
}
