//! C ABI over the school-choice library.
//!
//! Objects are opaque and owned by the caller once returned; release them
//! with the matching `*_free`. Every fallible call returns an `SchStatus`
//! and leaves a message readable through `sch_last_error_message` on the
//! same thread. Student and school indices are 0-based.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use school_choice::fairness::{blocking_students, is_stable};
use school_choice::io::{load_instance, parse_instance, IoError, LoadedInstance};
use school_choice::mechanisms::{run_mechanism, MechanismKind, MechanismSpec};
use school_choice::model::{Matching, StudentId};
use school_choice::verify::{reproduce_paper_example, FixtureId};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SchStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Parse = 3,
    Validation = 4,
    Io = 5,
    InvalidArgument = 6,
    Mechanism = 7,
    /// A Rust panic was caught at the boundary.
    Internal = 8,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SchMechanism {
    GaleShapley = 0,
    Boston = 1,
    FirstPreferenceFirst = 2,
    SerialDictatorship = 3,
    ChineseParallel = 4,
}

/// A validated instance with its student and school names.
pub struct SchInstance {
    inner: LoadedInstance,
}

/// A matching produced for a particular instance.
pub struct SchMatching {
    inner: Matching,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = CString::new(msg.into().replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

fn fail(status: SchStatus, msg: impl Into<String>) -> SchStatus {
    set_error(msg);
    status
}

fn guard(f: impl FnOnce() -> SchStatus) -> SchStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(_) => fail(SchStatus::Internal, "internal error"),
    }
}

fn io_status(e: &IoError) -> SchStatus {
    match e {
        IoError::Io { .. } => SchStatus::Io,
        IoError::Parse { .. } => SchStatus::Parse,
        IoError::Document(_) | IoError::Validation(_) => SchStatus::Validation,
    }
}

unsafe fn str_arg<'a>(p: *const c_char) -> Result<&'a str, SchStatus> {
    if p.is_null() {
        return Err(fail(SchStatus::NullPointer, "null string argument"));
    }
    CStr::from_ptr(p).to_str().map_err(|_| fail(SchStatus::InvalidUtf8, "string argument is not UTF-8"))
}

unsafe fn emit_instance(result: Result<LoadedInstance, IoError>, out: *mut *mut SchInstance) -> SchStatus {
    match result {
        Ok(inner) => {
            *out = Box::into_raw(Box::new(SchInstance { inner }));
            SchStatus::Ok
        }
        Err(e) => fail(io_status(&e), e.to_string()),
    }
}

/// Message for the last failed call on this thread, or NULL. Valid until
/// the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn sch_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Parses an instance document from a NUL-terminated JSON string.
///
/// # Safety
/// `json` must be a valid C string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sch_instance_from_json(json: *const c_char, out: *mut *mut SchInstance) -> SchStatus {
    guard(|| {
        if out.is_null() {
            return fail(SchStatus::NullPointer, "null output pointer");
        }
        *out = ptr::null_mut();
        match str_arg(json) {
            Ok(text) => emit_instance(parse_instance(text, "<json>"), out),
            Err(s) => s,
        }
    })
}

/// Loads an instance document from a file.
///
/// # Safety
/// `path` must be a valid C string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sch_instance_load(path: *const c_char, out: *mut *mut SchInstance) -> SchStatus {
    guard(|| {
        if out.is_null() {
            return fail(SchStatus::NullPointer, "null output pointer");
        }
        *out = ptr::null_mut();
        match str_arg(path) {
            Ok(p) => emit_instance(load_instance(Path::new(p)), out),
            Err(s) => s,
        }
    })
}

/// # Safety
/// `instance` must come from this library and not be freed twice. NULL is
/// ignored.
#[no_mangle]
pub unsafe extern "C" fn sch_instance_free(instance: *mut SchInstance) {
    if !instance.is_null() {
        drop(Box::from_raw(instance));
    }
}

/// Number of students, or 0 for NULL.
///
/// # Safety
/// `instance` must be NULL or a live instance.
#[no_mangle]
pub unsafe extern "C" fn sch_instance_n_students(instance: *const SchInstance) -> usize {
    instance.as_ref().map_or(0, |i| i.inner.instance.n_students())
}

/// Number of schools, or 0 for NULL.
///
/// # Safety
/// `instance` must be NULL or a live instance.
#[no_mangle]
pub unsafe extern "C" fn sch_instance_n_schools(instance: *const SchInstance) -> usize {
    instance.as_ref().map_or(0, |i| i.inner.instance.n_schools())
}

/// Runs a mechanism. `k` = 0 leaves lists unconstrained; `e` is the round
/// length and is read only for `ChineseParallel`.
///
/// # Safety
/// `instance` must be a live instance and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sch_run(
    instance: *const SchInstance,
    mechanism: SchMechanism,
    k: usize,
    e: usize,
    out: *mut *mut SchMatching,
) -> SchStatus {
    guard(|| {
        if out.is_null() {
            return fail(SchStatus::NullPointer, "null output pointer");
        }
        *out = ptr::null_mut();
        let Some(inst) = instance.as_ref() else {
            return fail(SchStatus::NullPointer, "null instance");
        };
        let kind = match mechanism {
            SchMechanism::GaleShapley => MechanismKind::GaleShapley,
            SchMechanism::Boston => MechanismKind::Boston,
            SchMechanism::FirstPreferenceFirst => MechanismKind::FirstPreferenceFirst,
            SchMechanism::SerialDictatorship => MechanismKind::SerialDictatorship,
            SchMechanism::ChineseParallel => MechanismKind::ChineseParallel { e },
        };
        let mut spec = MechanismSpec::new(kind);
        if k > 0 {
            spec = spec.with_k(k);
        }
        match run_mechanism(&spec, &inst.inner.instance) {
            Ok(m) => {
                *out = Box::into_raw(Box::new(SchMatching { inner: m }));
                SchStatus::Ok
            }
            Err(err) => fail(SchStatus::Mechanism, err.to_string()),
        }
    })
}

/// # Safety
/// `matching` must come from this library and not be freed twice. NULL is
/// ignored.
#[no_mangle]
pub unsafe extern "C" fn sch_matching_free(matching: *mut SchMatching) {
    if !matching.is_null() {
        drop(Box::from_raw(matching));
    }
}

/// School of `student`, or -1 when unmatched.
///
/// # Safety
/// `matching` must be a live matching and `out_school` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sch_matching_school_of(
    matching: *const SchMatching,
    student: usize,
    out_school: *mut i64,
) -> SchStatus {
    guard(|| {
        let (Some(m), false) = (matching.as_ref(), out_school.is_null()) else {
            return fail(SchStatus::NullPointer, "null argument");
        };
        if student >= m.inner.n_students() {
            return fail(SchStatus::InvalidArgument, format!("student index {student} out of range"));
        }
        *out_school = m.inner.school_of(StudentId(student)).map_or(-1, |s| s.0 as i64);
        SchStatus::Ok
    })
}

unsafe fn check_pair<'a>(
    instance: *const SchInstance,
    matching: *const SchMatching,
) -> Result<(&'a SchInstance, &'a SchMatching), SchStatus> {
    let (Some(i), Some(m)) = (instance.as_ref(), matching.as_ref()) else {
        return Err(fail(SchStatus::NullPointer, "null argument"));
    };
    if m.inner.n_students() != i.inner.instance.n_students() {
        return Err(fail(SchStatus::InvalidArgument, "matching does not belong to this instance"));
    }
    Ok((i, m))
}

/// Whether the matching is stable for the instance's true preferences.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn sch_is_stable(
    instance: *const SchInstance,
    matching: *const SchMatching,
    out: *mut bool,
) -> SchStatus {
    guard(|| match check_pair(instance, matching) {
        Ok(_) if out.is_null() => fail(SchStatus::NullPointer, "null output pointer"),
        Ok((i, m)) => {
            *out = is_stable(&m.inner, &i.inner.instance);
            SchStatus::Ok
        }
        Err(s) => s,
    })
}

/// Number of students in at least one blocking pair.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn sch_blocking_student_count(
    instance: *const SchInstance,
    matching: *const SchMatching,
    out: *mut usize,
) -> SchStatus {
    guard(|| match check_pair(instance, matching) {
        Ok(_) if out.is_null() => fail(SchStatus::NullPointer, "null output pointer"),
        Ok((i, m)) => {
            *out = blocking_students(&m.inner, &i.inner.instance).len();
            SchStatus::Ok
        }
        Err(s) => s,
    })
}

/// The matching as `{student: school|null}` JSON using the instance's
/// names. Release the string with `sch_string_free`.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn sch_matching_to_json(
    instance: *const SchInstance,
    matching: *const SchMatching,
    out: *mut *mut c_char,
) -> SchStatus {
    guard(|| match check_pair(instance, matching) {
        Ok(_) if out.is_null() => fail(SchStatus::NullPointer, "null output pointer"),
        Ok((i, m)) => {
            let text = i.inner.roster.matching_json(&m.inner).to_string();
            *out = CString::new(text).expect("JSON has no NUL").into_raw();
            SchStatus::Ok
        }
        Err(s) => s,
    })
}

/// # Safety
/// `s` must come from this library and not be freed twice. NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn sch_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Recomputes a worked example by name (e.g. "EX1") and reports whether
/// every value matched.
///
/// # Safety
/// `fixture` must be a valid C string and `out_passed` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sch_reproduce(fixture: *const c_char, out_passed: *mut bool) -> SchStatus {
    guard(|| {
        if out_passed.is_null() {
            return fail(SchStatus::NullPointer, "null output pointer");
        }
        let name = match str_arg(fixture) {
            Ok(n) => n,
            Err(s) => return s,
        };
        match name.parse::<FixtureId>() {
            Ok(id) => {
                *out_passed = reproduce_paper_example(id).passed;
                SchStatus::Ok
            }
            Err(_) => fail(SchStatus::InvalidArgument, format!("unknown fixture {name:?}")),
        }
    })
}
