use paritybet_ffi::*;
use std::ffi::{c_char, CStr, CString};
use std::ptr;

fn c(s: &str) -> CString {
    CString::new(s).unwrap()
}

unsafe fn take(s: *mut c_char) -> String {
    let out = CStr::from_ptr(s).to_str().unwrap().to_owned();
    pb_string_free(s);
    out
}

unsafe fn last_error() -> String {
    let p = pb_last_error_message();
    assert!(!p.is_null());
    CStr::from_ptr(p).to_str().unwrap().to_owned()
}

const M: &str = r#"{"depth":2,"kind":"martingale","values":{"":"1","0":"1/2","1":"3/2","00":"1/4","01":"3/4","10":"3/2","11":"3/2"}}"#;

#[test]
fn table_round_trip_and_value() {
    unsafe {
        let mut t = ptr::null_mut();
        assert_eq!(pb_table_from_json(c(M).as_ptr(), &mut t), PbStatus::Ok);
        let mut depth = 0usize;
        assert_eq!(pb_table_depth(t, &mut depth), PbStatus::Ok);
        assert_eq!(depth, 2);
        let mut v = ptr::null_mut();
        assert_eq!(pb_table_value(t, c("01").as_ptr(), &mut v), PbStatus::Ok);
        assert_eq!(take(v), "3/4");
        let mut valid = false;
        let mut diag = ptr::null_mut();
        assert_eq!(pb_table_validate(t, &mut valid, &mut diag), PbStatus::Ok);
        assert!(valid);
        assert!(take(diag).contains("\"martingale\""));
        let mut json = ptr::null_mut();
        assert_eq!(pb_table_to_json(t, &mut json), PbStatus::Ok);
        let mut again = ptr::null_mut();
        let text = CString::new(take(json)).unwrap();
        assert_eq!(pb_table_from_json(text.as_ptr(), &mut again), PbStatus::Ok);
        pb_table_free(again);
        pb_table_free(t);
    }
}

#[test]
fn factorize_through_the_abi() {
    unsafe {
        let mut t = ptr::null_mut();
        assert_eq!(pb_table_from_json(c(M).as_ptr(), &mut t), PbStatus::Ok);
        let (mut e, mut o) = (ptr::null_mut(), ptr::null_mut());
        assert_eq!(pb_parity_factorize(t, &mut e, &mut o), PbStatus::Ok);
        // M(01) = 1 · (1/2)(3/2) : E carries the odd step, O the even one
        let mut v = ptr::null_mut();
        assert_eq!(pb_table_value(e, c("01").as_ptr(), &mut v), PbStatus::Ok);
        assert_eq!(take(v), "3/2");
        assert_eq!(pb_table_value(o, c("01").as_ptr(), &mut v), PbStatus::Ok);
        assert_eq!(take(v), "1/2");
        for h in [t, e, o] {
            pb_table_free(h);
        }
    }
}

#[test]
fn block_min_even_and_interleave() {
    unsafe {
        let mut t = ptr::null_mut();
        assert_eq!(
            pb_block_min_even(c("4").as_ptr(), c("2").as_ptr(), &mut t),
            PbStatus::Ok
        );
        let mut v = ptr::null_mut();
        assert_eq!(pb_table_value(t, c("").as_ptr(), &mut v), PbStatus::Ok);
        assert_eq!(take(v), "2");
        assert_eq!(pb_table_value(t, c("11").as_ptr(), &mut v), PbStatus::Ok);
        assert_eq!(take(v), "2");
        pb_table_free(t);
        let mut s = ptr::null_mut();
        assert_eq!(
            pb_interleave(c("01").as_ptr(), c("10").as_ptr(), &mut s),
            PbStatus::Ok
        );
        assert_eq!(take(s), "0110");
    }
}

#[test]
fn params_json() {
    unsafe {
        let mut s = ptr::null_mut();
        assert_eq!(pb_params(2, &mut s), PbStatus::Ok);
        let v: serde_json::Value = serde_json::from_str(&take(s)).unwrap();
        assert_eq!(v[1]["s"], 18);
        assert_eq!(v[2]["p"], 44);
        assert_eq!(v[2]["q"], "5/4");
    }
}

#[test]
fn error_codes() {
    unsafe {
        let mut t = ptr::null_mut();
        assert_eq!(
            pb_table_from_json(ptr::null(), &mut t),
            PbStatus::NullPointer
        );
        assert_eq!(pb_table_from_json(c("{").as_ptr(), &mut t), PbStatus::Parse);
        assert!(last_error().starts_with("json"));
        let bad = [0xffu8, 0];
        assert_eq!(
            pb_table_from_json(bad.as_ptr() as *const c_char, &mut t),
            PbStatus::InvalidUtf8
        );
        let mut s = ptr::null_mut();
        assert_eq!(
            pb_interleave(c("0").as_ptr(), c("101").as_ptr(), &mut s),
            PbStatus::Domain
        );
        assert!(last_error().starts_with("length_mismatch"));
        assert_eq!(
            pb_block_min_even(c("-1").as_ptr(), c("0").as_ptr(), &mut t),
            PbStatus::Domain
        );
        let mut depth = 0usize;
        assert_eq!(
            pb_table_depth(ptr::null(), &mut depth),
            PbStatus::NullPointer
        );
        // a success clears the message
        assert_eq!(pb_params(0, &mut s), PbStatus::Ok);
        pb_string_free(s);
        assert!(pb_last_error_message().is_null());
        let super_m =
            r#"{"depth":1,"kind":"supermartingale","values":{"":"1","0":"1/2","1":"1/2"}}"#;
        assert_eq!(
            pb_table_from_json(c(super_m).as_ptr(), &mut t),
            PbStatus::Ok
        );
        let (mut e, mut o) = (ptr::null_mut(), ptr::null_mut());
        assert_eq!(pb_parity_factorize(t, &mut e, &mut o), PbStatus::Domain);
        pb_table_free(t);
    }
}

#[test]
fn header_is_valid_c() {
    let header = concat!(env!("CARGO_MANIFEST_DIR"), "/include/paritybet.h");
    assert!(std::path::Path::new(header).exists());
    let text = std::fs::read_to_string(header).unwrap();
    for f in [
        "pb_table_from_json",
        "pb_parity_factorize",
        "pb_last_error_message",
        "PB_STATUS_DOMAIN",
    ] {
        assert!(text.contains(f), "{f} missing from header");
    }
    let Ok(status) = std::process::Command::new("cc")
        .args(["-fsyntax-only", "-Wall", "-Werror", "-x", "c", header])
        .status()
    else {
        eprintln!("no C compiler; syntax check skipped");
        return;
    };
    assert!(status.success());
}
