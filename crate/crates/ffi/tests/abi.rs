use std::ffi::{c_char, CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use pricevar_ffi::*;

const RATES: &str = "2013-02-01,EUR,USD,1.30,1.32\n2013-02-01,USD,GBP,0.63,0.64\n";

fn c(s: &str) -> CString {
    CString::new(s).unwrap()
}

fn last_error() -> String {
    let mut buf = vec![0 as c_char; 256];
    let n = unsafe { pv_last_error(buf.as_mut_ptr(), buf.len()) };
    if n == 0 {
        return String::new();
    }
    unsafe { CStr::from_ptr(buf.as_ptr()) }.to_string_lossy().into_owned()
}

fn parser() -> *mut PvParser {
    let mut p = ptr::null_mut();
    assert_eq!(unsafe { pv_parser_new(&mut p) }, PvStatus::Ok);
    p
}

fn parse(p: *const PvParser, text: &str, locale: Option<&str>) -> Result<String, PvStatus> {
    let text = c(text);
    let locale = locale.map(c);
    let mut buf = vec![0 as c_char; 64];
    let mut needed = 0usize;
    let st = unsafe {
        pv_parse_price(
            p,
            text.as_ptr(),
            locale.as_ref().map_or(ptr::null(), |l| l.as_ptr()),
            buf.as_mut_ptr(),
            buf.len(),
            &mut needed,
        )
    };
    match st {
        PvStatus::Ok => Ok(unsafe { CStr::from_ptr(buf.as_ptr()) }.to_str().unwrap().to_string()),
        e => Err(e),
    }
}

#[test]
fn parses_prices_to_canonical_text() {
    let p = parser();
    assert_eq!(parse(p, "1.299,00 €", Some("de-DE")).unwrap(), "EUR 1299.00");
    assert_eq!(parse(p, "$1,299.99", None).unwrap(), "USD 1299.99");
    assert_eq!(parse(p, "free", None), Err(PvStatus::UnparseablePrice));
    assert!(!last_error().is_empty());
    assert_eq!(parse(ptr::null(), "1 USD", None), Err(PvStatus::NullArgument));
    assert!(last_error().contains("parser"));
    unsafe { pv_parser_free(p) };
    unsafe { pv_parser_free(ptr::null_mut()) };
}

#[test]
fn short_buffer_reports_needed_length() {
    let p = parser();
    let text = c("€ 12,50");
    let mut buf = [0 as c_char; 4];
    let mut needed = 0usize;
    let st = unsafe { pv_parse_price(p, text.as_ptr(), ptr::null(), buf.as_mut_ptr(), buf.len(), &mut needed) };
    assert_eq!(st, PvStatus::BufferTooSmall);
    assert_eq!(needed, "EUR 12.50".len() + 1);
    unsafe { pv_parser_free(p) };
}

#[test]
fn extracts_with_selector() {
    let p = parser();
    let html = c("<html><body><div><span>Was $90.00</span></div><div><span>Now</span><span>$79.99</span></div></body></html>");
    let mut buf = [0 as c_char; 32];
    let mut needed = 0usize;
    let sel = c("dom-path:body/div[2]/span[2]");
    let st = unsafe { pv_extract(p, html.as_ptr(), sel.as_ptr(), buf.as_mut_ptr(), buf.len(), &mut needed) };
    assert_eq!(st, PvStatus::Ok, "{}", last_error());
    assert_eq!(unsafe { CStr::from_ptr(buf.as_ptr()) }.to_str().unwrap(), "USD 79.99");
    let missing = c("body/table");
    let st = unsafe { pv_extract(p, html.as_ptr(), missing.as_ptr(), buf.as_mut_ptr(), buf.len(), &mut needed) };
    assert_eq!(st, PvStatus::SelectorMiss);
    unsafe { pv_parser_free(p) };
}

fn gate(table: *const PvRateTable, date: &str, prices: &[&str]) -> Result<PvGateResult, PvStatus> {
    let date = c(date);
    let owned: Vec<CString> = prices.iter().map(|s| c(s)).collect();
    let ptrs: Vec<*const c_char> = owned.iter().map(|s| s.as_ptr()).collect();
    let mut out = PvGateResult::default();
    match unsafe { pv_gate(table, date.as_ptr(), ptrs.as_ptr(), ptrs.len(), &mut out) } {
        PvStatus::Ok => Ok(out),
        e => Err(e),
    }
}

#[test]
fn gate_over_rate_windows() {
    let mut table = ptr::null_mut();
    let (records, usd) = (c(RATES), c("USD"));
    assert_eq!(unsafe { pv_rates_parse(records.as_ptr(), usd.as_ptr(), &mut table) }, PvStatus::Ok);

    // 100 EUR is worth 130..132 USD; 131 USD cannot be told apart.
    let v = gate(table, "2013-02-01", &["100.00 EUR", "USD 131.00"]).unwrap();
    assert_eq!(v.passed, 0);
    let v = gate(table, "2013-02-01", &["100.00 EUR", "140.00 USD", "120.00 USD"]).unwrap();
    assert_eq!(v.passed, 1);
    assert_eq!((v.cheaper, v.dearer), (2, 1));
    assert!((v.pessimistic_ratio - 139.995 / 120.005).abs() < 1e-9);
    assert!((v.observed_gap - 140.0 / 120.0).abs() < 1e-9);
    assert!(v.observed_gap > v.max_currency_gap);

    assert_eq!(gate(table, "2013-02-02", &["100.00 EUR", "1.00 USD"]).unwrap_err(), PvStatus::MissingRate);
    assert_eq!(gate(table, "2013-02-01", &["1.00 USD"]).unwrap_err(), PvStatus::InsufficientData);
    assert_eq!(gate(table, "01/02/2013", &["1 USD", "2 USD"]).unwrap_err(), PvStatus::InvalidArgument);
    unsafe { pv_rates_free(table) };

    let bad = c("2013-02-01,EUR,USD,1.32,1.30\n");
    let mut t2 = ptr::null_mut();
    assert_eq!(unsafe { pv_rates_parse(bad.as_ptr(), usd.as_ptr(), &mut t2) }, PvStatus::InvalidArgument);
    assert!(t2.is_null());
}

#[test]
fn fit_classifies() {
    let xs: Vec<CString> = ["10", "20", "50", "100", "400"].iter().map(|s| c(s)).collect();
    let ys: Vec<CString> = ["12.5", "25", "62.5", "125", "500"].iter().map(|s| c(s)).collect();
    let px: Vec<*const c_char> = xs.iter().map(|s| s.as_ptr()).collect();
    let py: Vec<*const c_char> = ys.iter().map(|s| s.as_ptr()).collect();
    let mut out = std::mem::MaybeUninit::<PvFitResult>::uninit();
    assert_eq!(unsafe { pv_fit(px.as_ptr(), py.as_ptr(), 5, out.as_mut_ptr()) }, PvStatus::Ok);
    let r = unsafe { out.assume_init() };
    assert!((r.a - 1.25).abs() < 1e-12 && r.b.abs() < 1e-12);
    assert_eq!(r.variation, PvVariationClass::Multiplicative);
    assert_eq!(r.degenerate, 0);
    let mut out = std::mem::MaybeUninit::<PvFitResult>::uninit();
    assert_eq!(unsafe { pv_fit(px.as_ptr(), py.as_ptr(), 3, out.as_mut_ptr()) }, PvStatus::InsufficientData);
}

#[test]
fn header_declares_every_export() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/pricevar.h")).unwrap();
    for f in [
        "pv_last_error",
        "pv_version",
        "pv_parser_new",
        "pv_parser_from_config",
        "pv_parser_free",
        "pv_parse_price",
        "pv_extract",
        "pv_rates_parse",
        "pv_rates_free",
        "pv_gate",
        "pv_fit",
        "typedef struct PvParser PvParser",
        "typedef struct PvRateTable PvRateTable",
        "PV_STATUS_BUFFER_TOO_SMALL = 9",
    ] {
        assert!(header.contains(f), "header lacks {f}");
    }
    assert_eq!(unsafe { CStr::from_ptr(pv_version()) }.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

const C_PROGRAM: &str = r#"
#include <stdio.h>
#include <string.h>
#include "pricevar.h"

int main(void) {
    PvParser *p = NULL;
    char buf[64];
    size_t needed = 0;
    if (pv_parser_new(&p) != PV_STATUS_OK) return 1;
    if (pv_parse_price(p, "1.299,00 \xe2\x82\xac", "de-DE", buf, sizeof buf, &needed) != PV_STATUS_OK) return 2;
    if (strcmp(buf, "EUR 1299.00") != 0) return 3;
    if (pv_parse_price(p, "n/a", NULL, buf, sizeof buf, &needed) != PV_STATUS_UNPARSEABLE_PRICE) return 4;
    if (pv_last_error(buf, sizeof buf) == 0) return 5;
    pv_parser_free(p);

    PvRateTable *t = NULL;
    if (pv_rates_parse("2013-02-01,EUR,USD,1.30,1.32\n", "USD", &t) != PV_STATUS_OK) return 6;
    const char *prices[] = {"100.00 EUR", "150.00 USD"};
    PvGateResult g;
    if (pv_gate(t, "2013-02-01", prices, 2, &g) != PV_STATUS_OK || !g.passed) return 7;
    pv_rates_free(t);
    printf("ok\n");
    return 0;
}
"#;

/// Builds a C program against the generated header and the static library.
#[test]
fn c_program_links_against_staticlib() {
    let Ok(cc) = which_cc() else {
        eprintln!("no C compiler; skipping");
        return;
    };
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    // tests/../target/<profile>/deps/abi-xxxx -> target/<profile>
    let exe = std::env::current_exe().unwrap();
    let profile_dir = exe.parent().unwrap().parent().unwrap();
    let lib = profile_dir.join("libpricevar_ffi.a");
    if !lib.exists() {
        eprintln!("{} not built; skipping", lib.display());
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("main.c");
    std::fs::write(&src, C_PROGRAM).unwrap();
    let bin = dir.path().join("main");
    let status = Command::new(&cc)
        .arg(&src)
        .arg("-I")
        .arg(manifest.join("include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&bin)
        .status()
        .unwrap();
    assert!(status.success(), "C build failed");
    let out = Command::new(&bin).output().unwrap();
    assert!(out.status.success(), "C program exited with {:?}", out.status.code());
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "ok");
}

fn which_cc() -> Result<String, ()> {
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    match Command::new(&cc).arg("--version").output() {
        Ok(o) if o.status.success() => Ok(cc),
        _ => Err(()),
    }
}
