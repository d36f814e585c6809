//! C ABI over the XTL kernel.
//!
//! Objects are opaque handles created by `*_parse` / `*_from_*` functions and
//! released with the matching `*_free`. Every fallible call returns an
//! [`XtlStatus`]; on failure [`xtl_last_error`] describes the cause. Strings
//! returned through out-parameters are owned by the caller and released with
//! [`xtl_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use xtl::{
    expand_detailed, explain, load_template, parse_xml_with, serialize_xml, serialize_xtl,
    validate, xml_repository, Error, ExpandError, ExpansionSettings, Hedge, MacroTable,
    ParseOptions, Reg, XmlRepository,
};

/// A parsed template, usable both for expansion and as a schema.
pub struct XtlSchema {
    entry: Reg,
    macros: MacroTable,
}

/// A parsed XML document.
pub struct XtlDocument {
    hedge: Hedge,
}

/// A repository snapshot built from a document.
pub struct XtlRepository {
    repo: XmlRepository,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum XtlStatus {
    Ok = 0,
    NullArgument = 1,
    MalformedXml = 2,
    BadTemplate = 3,
    BadQuery = 4,
    Unsatisfied = 5,
    RecursionLimit = 6,
    NotSerializable = 7,
    InteriorNul = 8,
    Panic = 9,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: &str) {
    let text = CString::new(message.replace('\0', "\\0")).expect("NUL bytes replaced");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(text));
}

fn status_of(error: &Error) -> XtlStatus {
    match error {
        Error::Xml(_) => XtlStatus::MalformedXml,
        Error::Query(_) | Error::Expand(ExpandError::Query(_)) => XtlStatus::BadQuery,
        Error::Expand(ExpandError::Unsatisfied { .. }) => XtlStatus::Unsatisfied,
        Error::Expand(ExpandError::RecursionLimit { .. }) => XtlStatus::RecursionLimit,
        Error::Expand(ExpandError::Xtl(_)) => XtlStatus::NotSerializable,
        Error::Xtl(xtl::XtlError::NotSerializable(_)) => XtlStatus::NotSerializable,
        _ => XtlStatus::BadTemplate,
    }
}

/// Runs `f`, turning errors and panics into a status and a stored message.
fn guard(f: impl FnOnce() -> Result<(), (XtlStatus, String)>) -> XtlStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => XtlStatus::Ok,
        Ok(Err((status, message))) => {
            set_error(&message);
            status
        }
        Err(_) => {
            set_error("internal panic");
            XtlStatus::Panic
        }
    }
}

fn fail(error: impl Into<Error>) -> (XtlStatus, String) {
    let error = error.into();
    (status_of(&error), error.to_string())
}

fn null(what: &str) -> (XtlStatus, String) {
    (XtlStatus::NullArgument, format!("{what} is null"))
}

unsafe fn bytes<'a>(src: *const u8, len: usize) -> Result<&'a [u8], (XtlStatus, String)> {
    if src.is_null() {
        if len == 0 {
            return Ok(&[]);
        }
        return Err(null("source"));
    }
    Ok(std::slice::from_raw_parts(src, len))
}

unsafe fn put_string(out: *mut *mut c_char, text: String) -> Result<(), (XtlStatus, String)> {
    let text = CString::new(text).map_err(|_| {
        (
            XtlStatus::InteriorNul,
            "output contains a NUL character".to_owned(),
        )
    })?;
    *out = text.into_raw();
    Ok(())
}

/// Message for the last failed call on this thread, or NULL. Valid until the
/// next failing call on the same thread.
#[no_mangle]
pub extern "C" fn xtl_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn xtl_version() -> *const c_char {
    static VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), "\0");
    VERSION.as_ptr().cast()
}

/// Releases a string returned by this library. NULL is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn xtl_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parses XTL source of `len` bytes into a schema handle.
///
/// # Safety
/// `src` must point to `len` readable bytes; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn xtl_schema_parse(
    src: *const u8,
    len: usize,
    out: *mut *mut XtlSchema,
) -> XtlStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let (entry, macros) =
            load_template(bytes(src, len)?, ParseOptions::default()).map_err(fail)?;
        *out = Box::into_raw(Box::new(XtlSchema { entry, macros }));
        Ok(())
    })
}

/// # Safety
/// `schema` must come from `xtl_schema_parse` and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn xtl_schema_free(schema: *mut XtlSchema) {
    if !schema.is_null() {
        drop(Box::from_raw(schema));
    }
}

/// Writes the canonical XTL serialization of `schema` to `*out`.
///
/// # Safety
/// `schema` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn xtl_schema_normalized(
    schema: *const XtlSchema,
    out: *mut *mut c_char,
) -> XtlStatus {
    guard(|| {
        let schema = schema.as_ref().ok_or_else(|| null("schema"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let hedge = serialize_xtl(&schema.entry, &schema.macros).map_err(fail)?;
        put_string(out, serialize_xml(&hedge).map_err(fail)?)
    })
}

/// Parses an XML document of `len` bytes.
///
/// # Safety
/// `src` must point to `len` readable bytes; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn xtl_document_parse(
    src: *const u8,
    len: usize,
    preserve_space: bool,
    out: *mut *mut XtlDocument,
) -> XtlStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let hedge =
            parse_xml_with(bytes(src, len)?, ParseOptions { preserve_space }).map_err(fail)?;
        *out = Box::into_raw(Box::new(XtlDocument { hedge }));
        Ok(())
    })
}

/// # Safety
/// `doc` must come from `xtl_document_parse` and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn xtl_document_free(doc: *mut XtlDocument) {
    if !doc.is_null() {
        drop(Box::from_raw(doc));
    }
}

/// Builds a repository from a document. The document handle stays owned by
/// the caller.
///
/// # Safety
/// `doc` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn xtl_repository_from_document(
    doc: *const XtlDocument,
    out: *mut *mut XtlRepository,
) -> XtlStatus {
    guard(|| {
        let doc = doc.as_ref().ok_or_else(|| null("doc"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = Box::into_raw(Box::new(XtlRepository {
            repo: xml_repository(&doc.hedge),
        }));
        Ok(())
    })
}

/// # Safety
/// `repo` must come from `xtl_repository_from_document` and not have been
/// freed.
#[no_mangle]
pub unsafe extern "C" fn xtl_repository_free(repo: *mut XtlRepository) {
    if !repo.is_null() {
        drop(Box::from_raw(repo));
    }
}

/// Sets `*valid` to whether `doc` belongs to the language of `schema`.
///
/// # Safety
/// Handles must be live; `valid` must be writable.
#[no_mangle]
pub unsafe extern "C" fn xtl_validate(
    schema: *const XtlSchema,
    doc: *const XtlDocument,
    valid: *mut bool,
) -> XtlStatus {
    guard(|| {
        let schema = schema.as_ref().ok_or_else(|| null("schema"))?;
        let doc = doc.as_ref().ok_or_else(|| null("doc"))?;
        if valid.is_null() {
            return Err(null("valid"));
        }
        *valid = validate(&schema.entry, &schema.macros, &doc.hedge)
            .map_err(fail)?
            .valid;
        Ok(())
    })
}

/// Like `xtl_validate`, and also writes the human-readable report.
///
/// # Safety
/// Handles must be live; `valid` and `report` must be writable.
#[no_mangle]
pub unsafe extern "C" fn xtl_validate_report(
    schema: *const XtlSchema,
    doc: *const XtlDocument,
    valid: *mut bool,
    report: *mut *mut c_char,
) -> XtlStatus {
    guard(|| {
        let schema = schema.as_ref().ok_or_else(|| null("schema"))?;
        let doc = doc.as_ref().ok_or_else(|| null("doc"))?;
        if valid.is_null() || report.is_null() {
            return Err(null("out"));
        }
        let verdict = validate(&schema.entry, &schema.macros, &doc.hedge).map_err(fail)?;
        put_string(report, explain(&verdict))?;
        *valid = verdict.valid;
        Ok(())
    })
}

/// Expands `schema` against `repo` and writes the serialized result. With
/// `strict`, a slot whose query selects nothing fails the call instead of
/// being staged. `staged` may be NULL; otherwise it receives the number of
/// staged slots.
///
/// # Safety
/// Handles must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn xtl_expand(
    schema: *const XtlSchema,
    repo: *const XtlRepository,
    strict: bool,
    out: *mut *mut c_char,
    staged: *mut usize,
) -> XtlStatus {
    guard(|| {
        let schema = schema.as_ref().ok_or_else(|| null("schema"))?;
        let repo = repo.as_ref().ok_or_else(|| null("repo"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let settings = ExpansionSettings {
            staging: !strict,
            ..ExpansionSettings::default()
        };
        let expansion =
            expand_detailed(&schema.entry, &schema.macros, &repo.repo, settings).map_err(fail)?;
        put_string(out, serialize_xml(&expansion.hedge).map_err(fail)?)?;
        if !staged.is_null() {
            *staged = expansion.staged.len();
        }
        Ok(())
    })
}
