//! C ABI over snapshot search, raw index search and the edit distance.
//!
//! Every fallible call returns an `NeStatus`. On failure the message is kept
//! per thread and can be read with `ne_last_error`. Strings handed out by
//! this library must be released with `ne_string_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use neuroembed::index::{index_from_bytes, VectorIndex};
use neuroembed::pipeline::{read_bytes, Snapshot};
use neuroembed::service::{query, stats};
use neuroembed::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NeStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    InvalidInput = 3,
    Io = 4,
    Parse = 5,
    Format = 6,
    Corrupt = 7,
    Shape = 8,
    Integrity = 9,
    Panic = 10,
}

/// A loaded snapshot directory.
pub struct NeSnapshot {
    inner: Snapshot,
}

/// A vector index loaded from its binary file.
pub struct NeIndex {
    inner: VectorIndex,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> NeStatus {
    match e {
        Error::Io { .. } => NeStatus::Io,
        Error::Parse { .. } | Error::Xml(_) | Error::Json(_) => NeStatus::Parse,
        Error::Format(_) => NeStatus::Format,
        Error::Corrupt(_) => NeStatus::Corrupt,
        Error::Shape { .. } | Error::ZeroVector => NeStatus::Shape,
        Error::Integrity(_) | Error::DuplicateAccession(_) => NeStatus::Integrity,
        _ => NeStatus::InvalidInput,
    }
}

struct Fail(NeStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> NeStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            NeStatus::Ok
        }
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            NeStatus::Panic
        }
    }
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(Fail(NeStatus::NullArgument, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail(NeStatus::InvalidUtf8, format!("{what} is not valid UTF-8")))
}

fn non_null<T>(p: *const T, what: &str) -> Result<(), Fail> {
    if p.is_null() {
        Err(Fail(NeStatus::NullArgument, format!("{what} is null")))
    } else {
        Ok(())
    }
}

fn to_c(s: String) -> Result<*mut c_char, Fail> {
    CString::new(s)
        .map(CString::into_raw)
        .map_err(|_| Fail(NeStatus::InvalidInput, "output contains a NUL byte".into()))
}

fn json<T: serde::Serialize>(v: &T) -> Result<*mut c_char, Fail> {
    to_c(serde_json::to_string(v).map_err(Error::from)?)
}

/// Message of the last failed call on this thread, or null. Valid until the
/// next call into this library from the same thread.
#[no_mangle]
pub extern "C" fn ne_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn ne_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// # Safety
/// `s` must be null or a string returned by this library, freed once.
#[no_mangle]
pub unsafe extern "C" fn ne_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Loads a snapshot directory into `*out`.
///
/// # Safety
/// `dir` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ne_snapshot_open(dir: *const c_char, out: *mut *mut NeSnapshot) -> NeStatus {
    guard(|| {
        non_null(out, "out")?;
        *out = ptr::null_mut();
        let dir = text(dir, "dir")?;
        let inner = Snapshot::load(Path::new(dir))?;
        *out = Box::into_raw(Box::new(NeSnapshot { inner }));
        Ok(())
    })
}

/// # Safety
/// `snap` must be null or a handle from `ne_snapshot_open`, freed once.
#[no_mangle]
pub unsafe extern "C" fn ne_snapshot_free(snap: *mut NeSnapshot) {
    if !snap.is_null() {
        drop(Box::from_raw(snap));
    }
}

/// Number of cohorts in the snapshot catalog; 0 for a null handle.
///
/// # Safety
/// `snap` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ne_snapshot_len(snap: *const NeSnapshot) -> usize {
    snap.as_ref().map_or(0, |s| s.inner.catalog.len())
}

/// Top-`k` cohorts for a free-text query, as the JSON body the HTTP query
/// endpoint returns.
///
/// # Safety
/// `snap` must be a live handle, `query_text` a NUL-terminated string and
/// `out_json` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ne_snapshot_query(
    snap: *const NeSnapshot,
    query_text: *const c_char,
    k: usize,
    out_json: *mut *mut c_char,
) -> NeStatus {
    guard(|| {
        non_null(out_json, "out_json")?;
        *out_json = ptr::null_mut();
        non_null(snap, "snapshot")?;
        let q = text(query_text, "query_text")?;
        *out_json = json(&query(&(*snap).inner, q, k)?)?;
        Ok(())
    })
}

/// Catalog, index, model and augmentation summary as JSON.
///
/// # Safety
/// `snap` must be a live handle and `out_json` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ne_snapshot_stats(snap: *const NeSnapshot, out_json: *mut *mut c_char) -> NeStatus {
    guard(|| {
        non_null(out_json, "out_json")?;
        *out_json = ptr::null_mut();
        non_null(snap, "snapshot")?;
        *out_json = json(&stats(&(*snap).inner))?;
        Ok(())
    })
}

/// Loads a binary index file into `*out`.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ne_index_open(path: *const c_char, out: *mut *mut NeIndex) -> NeStatus {
    guard(|| {
        non_null(out, "out")?;
        *out = ptr::null_mut();
        let path = text(path, "path")?;
        let inner = index_from_bytes(&read_bytes(Path::new(path))?)?;
        *out = Box::into_raw(Box::new(NeIndex { inner }));
        Ok(())
    })
}

/// # Safety
/// `index` must be null or a handle from `ne_index_open`, freed once.
#[no_mangle]
pub unsafe extern "C" fn ne_index_free(index: *mut NeIndex) {
    if !index.is_null() {
        drop(Box::from_raw(index));
    }
}

/// # Safety
/// `index` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ne_index_len(index: *const NeIndex) -> usize {
    index.as_ref().map_or(0, |i| i.inner.len())
}

/// # Safety
/// `index` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ne_index_dim(index: *const NeIndex) -> usize {
    index.as_ref().map_or(0, |i| i.inner.dim())
}

/// Cosine top-`k` for a raw query vector of length `dim`, as a JSON array
/// of `{accession, similarity, rank}`.
///
/// # Safety
/// `index` must be a live handle, `query_vec` must point to `dim` doubles
/// and `out_json` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ne_index_search(
    index: *const NeIndex,
    query_vec: *const f64,
    dim: usize,
    k: usize,
    out_json: *mut *mut c_char,
) -> NeStatus {
    guard(|| {
        non_null(out_json, "out_json")?;
        *out_json = ptr::null_mut();
        non_null(index, "index")?;
        non_null(query_vec, "query")?;
        let q = std::slice::from_raw_parts(query_vec, dim);
        *out_json = json(&(*index).inner.search(q, k)?)?;
        Ok(())
    })
}

/// Character-level edit distance between two UTF-8 strings.
///
/// # Safety
/// `a` and `b` must be NUL-terminated strings and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ne_levenshtein(a: *const c_char, b: *const c_char, out: *mut usize) -> NeStatus {
    guard(|| {
        non_null(out, "out")?;
        *out = neuroembed::ontology::levenshtein(text(a, "a")?, text(b, "b")?);
        Ok(())
    })
}
