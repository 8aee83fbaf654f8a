//! C ABI over `paritybet`.
//!
//! Every function returns a [`PbStatus`]. On failure a description is kept
//! per thread and can be read with [`pb_last_error_message`]. Tables are
//! passed around as opaque [`PbTable`] handles; strings returned through out
//! parameters are owned by the caller and released with [`pb_string_free`].
//! Rationals cross the boundary as `"p/q"` text.

use paritybet::dim_builder::params;
use paritybet::rational::{fmt_q, parse_q};
use paritybet::{decompose, validate, BitString, Error, StrategyTable};
use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

/// Result codes.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PbStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    /// Malformed input: JSON, rational or bit-string syntax, missing states.
    Parse = 3,
    /// Well-formed input that fails a domain check.
    Domain = 4,
    Panic = 5,
}

/// Opaque strategy table.
pub struct PbTable {
    inner: StrategyTable,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Fail(PbStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        let status = if e.is_input_error() {
            PbStatus::Parse
        } else {
            PbStatus::Domain
        };
        Fail(status, format!("{}: {e}", e.code()))
    }
}

impl From<serde_json::Error> for Fail {
    fn from(e: serde_json::Error) -> Self {
        Fail(PbStatus::Parse, format!("json: {e}"))
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> PbStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            PbStatus::Ok
        }
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("panic inside paritybet".into());
            PbStatus::Panic
        }
    }
}

unsafe fn read_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(Fail(PbStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail(PbStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

unsafe fn table<'a>(t: *const PbTable) -> Result<&'a StrategyTable, Fail> {
    t.as_ref()
        .map(|t| &t.inner)
        .ok_or_else(|| Fail(PbStatus::NullPointer, "table handle is null".into()))
}

unsafe fn put<T>(out: *mut T, value: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(Fail(PbStatus::NullPointer, "output pointer is null".into()));
    }
    out.write(value);
    Ok(())
}

unsafe fn put_string(out: *mut *mut c_char, s: String) -> Result<(), Fail> {
    let c =
        CString::new(s).map_err(|_| Fail(PbStatus::Panic, "string with interior NUL".into()))?;
    put(out, c.into_raw())
}

fn boxed(t: StrategyTable) -> *mut PbTable {
    Box::into_raw(Box::new(PbTable { inner: t }))
}

/// Message for the last failed call on this thread, or null. The pointer
/// stays valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn pb_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn pb_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parses a table document.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pb_table_from_json(
    json: *const c_char,
    out: *mut *mut PbTable,
) -> PbStatus {
    guard(|| {
        let t: StrategyTable = serde_json::from_str(read_str(json, "json")?)?;
        put(out, boxed(t))
    })
}

/// Releases a table handle. Null is ignored.
///
/// # Safety
/// `t` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn pb_table_free(t: *mut PbTable) {
    if !t.is_null() {
        drop(Box::from_raw(t));
    }
}

/// Serializes a table document.
///
/// # Safety
/// `t` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pb_table_to_json(t: *const PbTable, out: *mut *mut c_char) -> PbStatus {
    guard(|| {
        let text = serde_json::to_string(table(t)?)?;
        put_string(out, text)
    })
}

/// # Safety
/// `t` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pb_table_depth(t: *const PbTable, out: *mut usize) -> PbStatus {
    guard(|| put(out, table(t)?.depth()))
}

/// Capital at a state given as bit text (`""` for the empty state).
///
/// # Safety
/// `t` must be a live handle, `bits` NUL-terminated, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn pb_table_value(
    t: *const PbTable,
    bits: *const c_char,
    out: *mut *mut c_char,
) -> PbStatus {
    guard(|| {
        let t = table(t)?;
        let s: BitString = read_str(bits, "bits")?.parse()?;
        let v = t.get(&s).ok_or_else(|| {
            Fail(
                PbStatus::Domain,
                format!("state {s:?} is outside the table"),
            )
        })?;
        put_string(out, fmt_q(v))
    })
}

/// Validates a table; `out_valid` receives whether it meets its declared kind
/// and tags, `out_json` (optional) the full diagnosis.
///
/// # Safety
/// `t` must be a live handle; `out_valid` writable; `out_json` null or writable.
#[no_mangle]
pub unsafe extern "C" fn pb_table_validate(
    t: *const PbTable,
    out_valid: *mut bool,
    out_json: *mut *mut c_char,
) -> PbStatus {
    guard(|| {
        let d = validate(table(t)?);
        put(out_valid, d.valid())?;
        if !out_json.is_null() {
            put_string(out_json, serde_json::to_string(&d)?)?;
        }
        Ok(())
    })
}

/// Parses and validates a table document in one call.
///
/// # Safety
/// `json` must be NUL-terminated; `out_valid` writable; `out_json` null or writable.
#[no_mangle]
pub unsafe extern "C" fn pb_validate_json(
    json: *const c_char,
    out_valid: *mut bool,
    out_json: *mut *mut c_char,
) -> PbStatus {
    guard(|| {
        let t: StrategyTable = serde_json::from_str(read_str(json, "json")?)?;
        let d = validate(&t);
        put(out_valid, d.valid())?;
        if !out_json.is_null() {
            put_string(out_json, serde_json::to_string(&d)?)?;
        }
        Ok(())
    })
}

/// Splits a martingale into its odd-betting factor `E` and even-betting
/// factor `O`, so that `M = M(λ)·E·O`.
///
/// # Safety
/// `t` must be a live handle; both outputs writable.
#[no_mangle]
pub unsafe extern "C" fn pb_parity_factorize(
    t: *const PbTable,
    out_e: *mut *mut PbTable,
    out_o: *mut *mut PbTable,
) -> PbStatus {
    guard(|| {
        if out_e.is_null() || out_o.is_null() {
            return Err(Fail(PbStatus::NullPointer, "output pointer is null".into()));
        }
        let (e, o) = decompose::parity_factorize(table(t)?)?;
        put(out_e, boxed(e))?;
        put(out_o, boxed(o))
    })
}

/// The least odd-betting block martingale with the given values at `00`
/// and `10`.
///
/// # Safety
/// Inputs NUL-terminated; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn pb_block_min_even(
    m00: *const c_char,
    m10: *const c_char,
    out: *mut *mut PbTable,
) -> PbStatus {
    guard(|| {
        let a = parse_q(read_str(m00, "m00")?)?;
        let b = parse_q(read_str(m10, "m10")?)?;
        put(out, boxed(decompose::block_min_even(&a, &b)?))
    })
}

/// `x(0) y(0) x(1) y(1) …` for `|x| ∈ {|y|, |y|+1}`.
///
/// # Safety
/// Inputs NUL-terminated; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn pb_interleave(
    x: *const c_char,
    y: *const c_char,
    out: *mut *mut c_char,
) -> PbStatus {
    guard(|| {
        let x: BitString = read_str(x, "x")?.parse()?;
        let y: BitString = read_str(y, "y")?.parse()?;
        put_string(out, paritybet::interleave(&x, &y)?.to_string())
    })
}

/// Stage-construction parameters for `n = 0..=n_max` as a JSON array.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pb_params(n_max: usize, out: *mut *mut c_char) -> PbStatus {
    guard(|| put_string(out, serde_json::to_string(&params(n_max)?)?))
}
