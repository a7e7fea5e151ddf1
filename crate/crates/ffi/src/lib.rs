//! C ABI over `fkr-cex`.
//!
//! Every fallible call returns an [`FkrStatus`]. On failure the message is
//! kept per thread and can be copied out with [`fkr_last_error`]. Objects are
//! opaque handles released with their `_free` function; strings handed out
//! by the library are released with [`fkr_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use fkr_cex::catalog::{verify_analysis, Analysis, Example};
use fkr_cex::digraph::Digraph;
use fkr_cex::family::simulate_deletion;
use fkr_cex::hom::HomSearch;
use fkr_cex::Error;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FkrStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidInput = 3,
    ParseError = 4,
    ConstructionError = 5,
    IoError = 6,
    Panic = 7,
}

/// A digraph parsed from the line format (`v label`, `e from to`, `p label tag`).
pub struct FkrDigraph(Digraph);

/// A built example with its consistency closure, family and solutions.
pub struct FkrExample(Analysis);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<Vec<u8>>) {
    let c = CString::new(msg).unwrap_or_else(|_| CString::new("error message contained NUL").expect("no NUL"));
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> FkrStatus {
    match e {
        Error::Input(_) | Error::DomainTooLarge { .. } => FkrStatus::InvalidInput,
        Error::Parse { .. } => FkrStatus::ParseError,
        Error::Construction(_) => FkrStatus::ConstructionError,
        Error::Io(_) => FkrStatus::IoError,
    }
}

struct Fail(FkrStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> FkrStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => FkrStatus::Ok,
        Ok(Err(Fail(s, msg))) => {
            set_error(msg);
            s
        }
        Err(_) => {
            set_error("panic inside fkr-cex");
            FkrStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(Fail(FkrStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail(FkrStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

unsafe fn ref_arg<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| Fail(FkrStatus::NullPointer, format!("{what} is null")))
}

unsafe fn out_arg<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or_else(|| Fail(FkrStatus::NullPointer, format!("{what} is null")))
}

fn to_c(s: String) -> Result<*mut c_char, Fail> {
    CString::new(s)
        .map(CString::into_raw)
        .map_err(|_| Fail(FkrStatus::InvalidInput, "output contained NUL".into()))
}

/// Copies the calling thread's last error message, or returns null if there
/// is none. Free the result with [`fkr_string_free`].
#[no_mangle]
pub extern "C" fn fkr_last_error() -> *mut c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null_mut(), |c| c.clone().into_raw()))
}

/// # Safety
/// `s` must be null or a string returned by this library, freed once.
#[no_mangle]
pub unsafe extern "C" fn fkr_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// # Safety
/// `text` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fkr_digraph_parse(text: *const c_char, out: *mut *mut FkrDigraph) -> FkrStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let g = fkr_cex::format::parse_digraph(str_arg(text, "text")?)?;
        *out = Box::into_raw(Box::new(FkrDigraph(g)));
        Ok(())
    })
}

/// # Safety
/// `g` must be null or a handle from [`fkr_digraph_parse`], freed once.
#[no_mangle]
pub unsafe extern "C" fn fkr_digraph_free(g: *mut FkrDigraph) {
    if !g.is_null() {
        drop(Box::from_raw(g));
    }
}

/// Number of vertices, or 0 for a null handle.
///
/// # Safety
/// `g` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn fkr_digraph_vertex_count(g: *const FkrDigraph) -> usize {
    g.as_ref().map_or(0, |g| g.0.len())
}

/// Counts homomorphisms `g -> h`, stopping at `limit` when it is nonzero.
///
/// # Safety
/// `g` and `h` must be live handles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fkr_count_homomorphisms(
    g: *const FkrDigraph,
    h: *const FkrDigraph,
    limit: u64,
    out: *mut u64,
) -> FkrStatus {
    guard(|| {
        let (g, h) = (ref_arg(g, "g")?, ref_arg(h, "h")?);
        let out = out_arg(out, "out")?;
        *out = HomSearch::new(&g.0, &h.0).limit((limit > 0).then_some(limit)).count();
        Ok(())
    })
}

/// Builds an example (`"1"`, `"2"`, `"2x"` or `"exampleN"`) and runs the
/// consistency closure on it.
///
/// # Safety
/// `name` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fkr_example_build(name: *const c_char, out: *mut *mut FkrExample) -> FkrStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let name = str_arg(name, "name")?;
        let ex = Example::parse(name)
            .ok_or_else(|| Fail(FkrStatus::InvalidInput, format!("unknown example {name:?}")))?;
        *out = Box::into_raw(Box::new(FkrExample(Analysis::new(ex.build()?))));
        Ok(())
    })
}

/// # Safety
/// `ex` must be null or a handle from [`fkr_example_build`], freed once.
#[no_mangle]
pub unsafe extern "C" fn fkr_example_free(ex: *mut FkrExample) {
    if !ex.is_null() {
        drop(Box::from_raw(ex));
    }
}

/// Number of homomorphisms `G -> H` of the example.
///
/// # Safety
/// `ex` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fkr_example_hom_count(ex: *const FkrExample, out: *mut u64) -> FkrStatus {
    guard(|| {
        let ex = ref_arg(ex, "ex")?;
        *out_arg(out, "out")? = ex.0.homs.len() as u64;
        Ok(())
    })
}

/// Runs every check. Writes the report (text, or JSON lines when `json` is
/// true) to `report` and whether all checks passed to `passed`.
///
/// # Safety
/// `ex` must be a live handle; `report` and `passed` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fkr_example_report(
    ex: *const FkrExample,
    json: bool,
    report: *mut *mut c_char,
    passed: *mut bool,
) -> FkrStatus {
    guard(|| {
        let ex = ref_arg(ex, "ex")?;
        let report = out_arg(report, "report")?;
        let passed = out_arg(passed, "passed")?;
        let r = verify_analysis(&ex.0)?;
        *passed = r.all_passed();
        *report = to_c(if json { r.to_json_lines() } else { r.to_text() })?;
        Ok(())
    })
}

/// Deletes `value` from the list of `vertex` (both by label), re-closes and
/// writes the surviving homomorphism count to `solutions_after`.
///
/// # Safety
/// `ex` must be a live handle; the strings NUL-terminated; `solutions_after`
/// writable.
#[no_mangle]
pub unsafe extern "C" fn fkr_example_delete(
    ex: *const FkrExample,
    vertex: *const c_char,
    value: *const c_char,
    solutions_after: *mut u64,
) -> FkrStatus {
    guard(|| {
        let an = &ref_arg(ex, "ex")?.0;
        let (vl, al) = (str_arg(vertex, "vertex")?, str_arg(value, "value")?);
        let out = out_arg(solutions_after, "solutions_after")?;
        let tr = &an.bundle.translation;
        let bad = |m: String| Fail(FkrStatus::InvalidInput, m);
        let v = tr.g.vertex(vl).ok_or_else(|| bad(format!("no vertex {vl:?} in G")))?;
        let a = tr.h.vertex(al).ok_or_else(|| bad(format!("no vertex {al:?} in H")))?;
        if !an.state.contains(v, a) {
            return Err(bad(format!("{al} is not in L({vl})")));
        }
        *out = simulate_deletion(tr, &an.state, v, a)?.solutions_after;
        Ok(())
    })
}
