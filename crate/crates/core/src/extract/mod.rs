//! Price extraction: locate the highlighted price in a fetched page and read
//! it into a typed [`Money`].

mod config;
mod currency;
mod number;
mod selector;

use std::sync::Arc;

use scraper::ElementRef;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use config::{CurrencyConfig, GroupSeparator, NumberConvention, SymbolRecord};
pub use currency::{CurrencyMatch, CurrencySource, PageContext};
pub use selector::{apply_selector, PriceSelector, SelectorKind};

use crate::money::{Money, MoneyError, MIN_FRACTION_DIGITS};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ExtractError {
    #[error("selector {0} addresses no node (page layout changed?)")]
    SelectorMiss(String),
    #[error("text anchor matches {count} regions")]
    SelectorAmbiguous { count: usize },
    #[error("invalid selector: {0}")]
    InvalidSelector(String),
    #[error("price text is empty")]
    EmptyText,
    #[error("no consistent numeric reading of {0:?}")]
    UnparseablePrice(String),
    #[error("cannot determine the currency of {0:?}")]
    UnknownCurrency(String),
    #[error("currency config line {line}: {message}")]
    Config { line: usize, message: String },
}

/// Text of a located price plus an optional locale tag.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawPriceText {
    text: String,
    locale_hint: Option<String>,
}

impl RawPriceText {
    pub fn new(text: &str, locale_hint: Option<String>) -> Result<Self, ExtractError> {
        let text = normalize_whitespace(text);
        if text.is_empty() {
            return Err(ExtractError::EmptyText);
        }
        Ok(RawPriceText { text, locale_hint })
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    pub fn locale_hint(&self) -> Option<&str> {
        self.locale_hint.as_deref()
    }
}

/// Collapses whitespace runs (including no-break spaces) to one space and trims.
pub(crate) fn normalize_whitespace(s: &str) -> String {
    s.split(|c: char| c.is_whitespace() || c == '\u{a0}' || c == '\u{202f}')
        .filter(|p| !p.is_empty())
        .collect::<Vec<_>>()
        .join(" ")
}

pub(crate) fn visible_text(el: ElementRef<'_>) -> String {
    selector::text_nodes(el).join(" ")
}

/// Reads raw price text into [`Money`] using a currency configuration.
///
/// Cheap to clone; the configuration is shared.
#[derive(Debug, Clone, Default)]
pub struct PriceParser {
    config: Arc<CurrencyConfig>,
}

impl PriceParser {
    pub fn new(config: CurrencyConfig) -> Self {
        PriceParser {
            config: Arc::new(config),
        }
    }

    pub fn config(&self) -> &CurrencyConfig {
        &self.config
    }

    pub fn detect_currency(&self, raw: &RawPriceText, page: Option<&PageContext>) -> Result<CurrencyMatch, ExtractError> {
        currency::detect_currency(&self.config, raw, page)
    }

    pub fn parse_price(&self, raw: &RawPriceText, page: Option<&PageContext>) -> Result<Money, ExtractError> {
        let unparseable = || ExtractError::UnparseablePrice(raw.text().to_string());
        let token = number::numeric_token(raw.text())?;
        let convention = match raw.locale_hint().and_then(|tag| self.config.convention(tag)) {
            Some(c) => c,
            None => number::infer_convention(token),
        };
        let amount = number::read_with_convention(token, convention)?;
        let detected = self.detect_currency(raw, page)?;
        if !self.config.is_known(detected.code) {
            return Err(ExtractError::UnknownCurrency(raw.text().to_string()));
        }
        Money::new(amount, detected.code).map_err(|e| match e {
            MoneyError::NonPositive(_) | MoneyError::TooPrecise(_) => unparseable(),
            MoneyError::InvalidCurrency(s) => ExtractError::UnknownCurrency(s),
        })
    }

    /// Locates and reads the price in one step.
    pub fn extract(&self, page: &str, sel: &PriceSelector) -> Result<Money, ExtractError> {
        let raw = apply_selector(page, sel)?;
        let ctx = PageContext::from_html(page);
        self.parse_price(&raw, Some(&ctx))
    }
}

/// `"CODE amount"` with a period decimal mark and no grouping.
///
/// Cent-granular amounts get exactly two fraction digits; amounts carrying
/// sub-cent precision are written with four so the text reads back exactly.
pub fn canonical_format(m: &Money) -> String {
    let mut amount = m.amount();
    let digits = if m.is_cent_granular() { MIN_FRACTION_DIGITS } else { 4 };
    amount.rescale(digits);
    format!("{} {}", m.currency(), amount)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::money::Currency;
    use rust_decimal_macros::dec;

    fn parse(text: &str, hint: Option<&str>) -> Result<Money, ExtractError> {
        PriceParser::default().parse_price(&RawPriceText::new(text, hint.map(String::from)).unwrap(), None)
    }

    fn money(amount: rust_decimal::Decimal, code: &str) -> Money {
        Money::new(amount, Currency::new(code).unwrap()).unwrap()
    }

    #[test]
    fn locale_conventions() {
        assert_eq!(parse("€1.234,56", Some("de-DE")).unwrap(), money(dec!(1234.56), "EUR"));
        assert_eq!(parse("$1,234.56", None).unwrap(), money(dec!(1234.56), "USD"));
        assert_eq!(parse("1 234,56 €", Some("fi-FI")).unwrap(), money(dec!(1234.56), "EUR"));
        assert_eq!(parse("CHF 1'234.50", Some("de-CH")).unwrap(), money(dec!(1234.50), "CHF"));
    }

    #[test]
    fn bare_amount_uses_page_currency() {
        let ctx = PageContext::from_text("Preise in EUR. 19,99");
        let raw = RawPriceText::new("19,99", None).unwrap();
        assert_eq!(
            PriceParser::default().parse_price(&raw, Some(&ctx)).unwrap(),
            money(dec!(19.99), "EUR")
        );
    }

    #[test]
    fn errors() {
        assert!(matches!(parse("12.00", None), Err(ExtractError::UnknownCurrency(_))));
        assert!(matches!(parse("€ -", None), Err(ExtractError::UnparseablePrice(_))));
        assert!(matches!(parse("€0,00", None), Err(ExtractError::UnparseablePrice(_))));
        assert!(matches!(parse("€1.23456", Some("en-IE")), Err(ExtractError::UnparseablePrice(_))));
        assert!(matches!(parse("€1.234,56", Some("en-US")), Err(ExtractError::UnparseablePrice(_))));
        assert!(RawPriceText::new("  \u{a0} ", None).is_err());
    }

    #[test]
    fn canonical_examples() {
        assert_eq!(canonical_format(&money(dec!(1234.5), "EUR")), "EUR 1234.50");
        assert_eq!(canonical_format(&money(dec!(0.99), "USD")), "USD 0.99");
        assert_eq!(canonical_format(&money(dec!(1.234), "USD")), "USD 1.2340");
        assert_eq!(money(dec!(12), "GBP").to_string(), "GBP 12.00");
    }

    #[test]
    fn canonical_text_reads_back() {
        for (amount, code) in [(dec!(1.234), "USD"), (dec!(1234.5), "EUR"), (dec!(0.0001), "GBP")] {
            let m = money(amount, code);
            assert_eq!(parse(&canonical_format(&m), None).unwrap(), m);
        }
    }
}
