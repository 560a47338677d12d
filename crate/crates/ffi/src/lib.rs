//! C ABI over the pricevar parsing, currency gate and model-fit routines.
//!
//! Conventions:
//! - every function returns a [`PvStatus`]; on failure the message is
//!   available from [`pv_last_error`] on the same thread
//! - handles are opaque and must be released with their `_free` function
//! - strings are NUL-terminated UTF-8; amounts cross the boundary as decimal
//!   text (`"1299.99"`) so nothing is lost to binary floating point
//! - text outputs are written into caller buffers; `*needed` always receives
//!   the full length including the NUL, so a short buffer can be retried

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::str::FromStr;

use chrono::NaiveDate;
use rust_decimal::prelude::ToPrimitive;
use rust_decimal::Decimal;

use pricevar::analytics::{fit_variation_model, AnalyticsError, VariationClass};
use pricevar::extract::{canonical_format, CurrencyConfig, ExtractError, PriceParser, PriceSelector, RawPriceText};
use pricevar::fx::{currency_gate_prices, FxError, RateTable};
use pricevar::{Currency, Money};

/// Result codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PvStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    InvalidArgument = 3,
    SelectorMiss = 4,
    UnparseablePrice = 5,
    UnknownCurrency = 6,
    MissingRate = 7,
    InsufficientData = 8,
    BufferTooSmall = 9,
    Panic = 10,
}

/// Reads price text into money. Shareable across threads for reading.
pub struct PvParser(PriceParser);

/// Daily rate windows against one reference currency.
pub struct PvRateTable(RateTable);

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct PvGateResult {
    /// 1 when the prices cannot be reconciled by exchange rates alone.
    pub passed: i32,
    pub observed_gap: f64,
    pub max_currency_gap: f64,
    pub pessimistic_ratio: f64,
    /// Input indices of the deciding pair.
    pub cheaper: usize,
    pub dearer: usize,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PvVariationClass {
    Multiplicative = 0,
    Additive = 1,
    Mixed = 2,
    Flat = 3,
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct PvFitResult {
    pub a: f64,
    pub b: f64,
    pub residual: f64,
    pub variation: PvVariationClass,
    /// 1 when every p_min was equal and the slope is undetermined.
    pub degenerate: i32,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(PvStatus, String);

impl Failure {
    fn new(status: PvStatus, msg: impl Into<String>) -> Self {
        Failure(status, msg.into())
    }
}

impl From<ExtractError> for Failure {
    fn from(e: ExtractError) -> Self {
        let status = match e {
            ExtractError::SelectorMiss(_) | ExtractError::SelectorAmbiguous { .. } => PvStatus::SelectorMiss,
            ExtractError::EmptyText | ExtractError::UnparseablePrice(_) => PvStatus::UnparseablePrice,
            ExtractError::UnknownCurrency(_) => PvStatus::UnknownCurrency,
            ExtractError::InvalidSelector(_) | ExtractError::Config { .. } => PvStatus::InvalidArgument,
        };
        Failure(status, e.to_string())
    }
}

impl From<FxError> for Failure {
    fn from(e: FxError) -> Self {
        let status = match e {
            FxError::MissingRate { .. } | FxError::MissingReferenceCurrency(_) => PvStatus::MissingRate,
            FxError::InsufficientObservations(_) => PvStatus::InsufficientData,
            _ => PvStatus::InvalidArgument,
        };
        Failure(status, e.to_string())
    }
}

impl From<AnalyticsError> for Failure {
    fn from(e: AnalyticsError) -> Self {
        let status = match e {
            AnalyticsError::InsufficientPairs(_) | AnalyticsError::InsufficientObservations(_) => {
                PvStatus::InsufficientData
            }
            _ => PvStatus::InvalidArgument,
        };
        Failure(status, e.to_string())
    }
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

/// Runs `f`, recording any failure or panic as the thread's last error.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> PvStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|slot| *slot.borrow_mut() = None);
            PvStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(&msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            PvStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure::new(PvStatus::NullArgument, format!("{name} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure::new(PvStatus::InvalidUtf8, format!("{name} is not UTF-8")))
}

unsafe fn opt_str_arg<'a>(p: *const c_char, name: &str) -> Result<Option<&'a str>, Failure> {
    if p.is_null() {
        Ok(None)
    } else {
        str_arg(p, name).map(Some)
    }
}

unsafe fn ref_arg<'a, T>(p: *const T, name: &str) -> Result<&'a T, Failure> {
    p.as_ref()
        .ok_or_else(|| Failure::new(PvStatus::NullArgument, format!("{name} is null")))
}

unsafe fn str_array<'a>(p: *const *const c_char, n: usize, name: &str) -> Result<Vec<&'a str>, Failure> {
    if p.is_null() && n > 0 {
        return Err(Failure::new(PvStatus::NullArgument, format!("{name} is null")));
    }
    (0..n).map(|i| str_arg(*p.add(i), name)).collect()
}

fn decimal(s: &str) -> Result<Decimal, Failure> {
    Decimal::from_str(s.trim()).map_err(|e| Failure::new(PvStatus::InvalidArgument, format!("{s:?}: {e}")))
}

fn date(s: &str) -> Result<NaiveDate, Failure> {
    NaiveDate::from_str(s.trim()).map_err(|e| Failure::new(PvStatus::InvalidArgument, format!("{s:?}: {e}")))
}

fn currency(s: &str) -> Result<Currency, Failure> {
    Currency::new(s.trim()).map_err(|e| Failure::new(PvStatus::InvalidArgument, e.to_string()))
}

/// `"<amount> <CODE>"` or the canonical `"<CODE> <amount>"`.
fn money(s: &str) -> Result<Money, Failure> {
    let (left, right) = s
        .trim()
        .split_once(' ')
        .ok_or_else(|| Failure::new(PvStatus::InvalidArgument, format!("{s:?}: expected amount and code")))?;
    let (amount, code) = if left.chars().all(|c| c.is_ascii_alphabetic()) {
        (right, left)
    } else {
        (left, right)
    };
    Money::new(decimal(amount)?, currency(code)?).map_err(|e| Failure::new(PvStatus::InvalidArgument, e.to_string()))
}

fn f64_of(d: Decimal) -> f64 {
    d.to_f64().unwrap_or(f64::NAN)
}

unsafe fn write_out(text: &str, buf: *mut c_char, len: usize, needed: *mut usize) -> Result<(), Failure> {
    let bytes = text.as_bytes();
    if !needed.is_null() {
        *needed = bytes.len() + 1;
    }
    if buf.is_null() || len < bytes.len() + 1 {
        return Err(Failure::new(
            PvStatus::BufferTooSmall,
            format!("need {} bytes, buffer has {len}", bytes.len() + 1),
        ));
    }
    ptr::copy_nonoverlapping(bytes.as_ptr(), buf.cast::<u8>(), bytes.len());
    *buf.add(bytes.len()) = 0;
    Ok(())
}

/// Copies the calling thread's last error message into `buf`.
///
/// Returns the length the message needs including the NUL, or 0 when the
/// last call succeeded. Truncates to fit `len`.
///
/// # Safety
/// `buf` must be null or valid for `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn pv_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|slot| match slot.borrow().as_ref() {
        None => 0,
        Some(msg) => {
            let bytes = msg.as_bytes();
            if !buf.is_null() && len > 0 {
                let n = bytes.len().min(len - 1);
                ptr::copy_nonoverlapping(bytes.as_ptr(), buf.cast::<u8>(), n);
                *buf.add(n) = 0;
            }
            bytes.len() + 1
        }
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn pv_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Parser with the built-in currency configuration.
///
/// # Safety
/// `out` must be valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn pv_parser_new(out: *mut *mut PvParser) -> PvStatus {
    guard(|| {
        if out.is_null() {
            return Err(Failure::new(PvStatus::NullArgument, "out is null"));
        }
        *out = Box::into_raw(Box::new(PvParser(PriceParser::default())));
        Ok(())
    })
}

/// Parser with a currency configuration in the text format the CLI reads.
///
/// # Safety
/// `config` must be a valid C string; `out` must be valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn pv_parser_from_config(config: *const c_char, out: *mut *mut PvParser) -> PvStatus {
    guard(|| {
        let text = str_arg(config, "config")?;
        if out.is_null() {
            return Err(Failure::new(PvStatus::NullArgument, "out is null"));
        }
        let parsed = CurrencyConfig::parse(text)?;
        *out = Box::into_raw(Box::new(PvParser(PriceParser::new(parsed))));
        Ok(())
    })
}

/// # Safety
/// `parser` must be null or come from a `pv_parser_*` constructor, and not be
/// used afterwards.
#[no_mangle]
pub unsafe extern "C" fn pv_parser_free(parser: *mut PvParser) {
    if !parser.is_null() {
        drop(Box::from_raw(parser));
    }
}

/// Reads one price text (`"1.299,00 €"`) to canonical `"EUR 1299.00"`.
/// `locale` may be null.
///
/// # Safety
/// Pointers must be valid; `buf` must be valid for `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn pv_parse_price(
    parser: *const PvParser,
    text: *const c_char,
    locale: *const c_char,
    buf: *mut c_char,
    len: usize,
    needed: *mut usize,
) -> PvStatus {
    guard(|| {
        let parser = ref_arg(parser, "parser")?;
        let raw = RawPriceText::new(str_arg(text, "text")?, opt_str_arg(locale, "locale")?.map(str::to_string))?;
        let m = parser.0.parse_price(&raw, None)?;
        write_out(&canonical_format(&m), buf, len, needed)
    })
}

/// Locates the price in `html` with `selector` (`dom-path:...` or
/// `text-anchor:...`) and writes its canonical form.
///
/// # Safety
/// Pointers must be valid; `buf` must be valid for `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn pv_extract(
    parser: *const PvParser,
    html: *const c_char,
    selector: *const c_char,
    buf: *mut c_char,
    len: usize,
    needed: *mut usize,
) -> PvStatus {
    guard(|| {
        let parser = ref_arg(parser, "parser")?;
        let sel = PriceSelector::from_str(str_arg(selector, "selector")?)?;
        let m = parser.0.extract(str_arg(html, "html")?, &sel)?;
        write_out(&canonical_format(&m), buf, len, needed)
    })
}

/// Loads `date,base,quote,low,high` records.
///
/// # Safety
/// Strings must be valid C strings; `out` must be valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn pv_rates_parse(
    records: *const c_char,
    reference: *const c_char,
    out: *mut *mut PvRateTable,
) -> PvStatus {
    guard(|| {
        let text = str_arg(records, "records")?;
        let reference = currency(str_arg(reference, "reference")?)?;
        if out.is_null() {
            return Err(Failure::new(PvStatus::NullArgument, "out is null"));
        }
        let table = RateTable::parse(text, reference)?;
        *out = Box::into_raw(Box::new(PvRateTable(table)));
        Ok(())
    })
}

/// # Safety
/// `table` must be null or come from `pv_rates_parse`, and not be used
/// afterwards.
#[no_mangle]
pub unsafe extern "C" fn pv_rates_free(table: *mut PvRateTable) {
    if !table.is_null() {
        drop(Box::from_raw(table));
    }
}

/// Currency gate over `n` prices (`"100.00 EUR"`) observed on `date`
/// (`YYYY-MM-DD`).
///
/// # Safety
/// `prices` must point to `n` valid C strings; other pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn pv_gate(
    table: *const PvRateTable,
    date_text: *const c_char,
    prices: *const *const c_char,
    n: usize,
    out: *mut PvGateResult,
) -> PvStatus {
    guard(|| {
        let table = ref_arg(table, "table")?;
        let day = date(str_arg(date_text, "date")?)?;
        let prices = str_array(prices, n, "prices")?
            .into_iter()
            .map(money)
            .collect::<Result<Vec<_>, _>>()?;
        if out.is_null() {
            return Err(Failure::new(PvStatus::NullArgument, "out is null"));
        }
        let v = currency_gate_prices(&prices, day, &table.0)?;
        *out = PvGateResult {
            passed: v.passed as i32,
            observed_gap: f64_of(v.observed_gap),
            max_currency_gap: f64_of(v.max_currency_gap),
            pessimistic_ratio: f64_of(v.pessimistic_ratio),
            cheaper: v.cheaper,
            dearer: v.dearer,
        };
        Ok(())
    })
}

/// Fits `p_loc = a·p_min + b` over `n` pairs of decimal texts and classifies
/// the variation.
///
/// # Safety
/// `p_min` and `p_loc` must each point to `n` valid C strings; `out` must be
/// valid.
#[no_mangle]
pub unsafe extern "C" fn pv_fit(
    p_min: *const *const c_char,
    p_loc: *const *const c_char,
    n: usize,
    out: *mut PvFitResult,
) -> PvStatus {
    guard(|| {
        let xs = str_array(p_min, n, "p_min")?;
        let ys = str_array(p_loc, n, "p_loc")?;
        let pairs = xs
            .into_iter()
            .zip(ys)
            .map(|(x, y)| Ok((decimal(x)?, decimal(y)?)))
            .collect::<Result<Vec<_>, Failure>>()?;
        if out.is_null() {
            return Err(Failure::new(PvStatus::NullArgument, "out is null"));
        }
        let m = fit_variation_model("", "", &pairs)?;
        *out = PvFitResult {
            a: f64_of(m.a),
            b: f64_of(m.b),
            residual: m.residual,
            variation: match m.class {
                VariationClass::Multiplicative => PvVariationClass::Multiplicative,
                VariationClass::Additive => PvVariationClass::Additive,
                VariationClass::Mixed => PvVariationClass::Mixed,
                VariationClass::Flat => PvVariationClass::Flat,
            },
            degenerate: m.degenerate as i32,
        };
        Ok(())
    })
}
