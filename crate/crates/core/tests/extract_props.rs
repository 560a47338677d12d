use std::str::FromStr;

use pricevar::extract::{canonical_format, PageContext, PriceParser, RawPriceText};
use pricevar::{Currency, Money};
use proptest::prelude::*;
use rust_decimal::Decimal;

/// Formatted/parsed pairs written out by hand per locale convention.
const LOCALE_TABLE: &[(&str, Option<&str>, &str, &str)] = &[
    // (text, locale hint, expected amount, expected code)
    ("€1.234,56", Some("de-DE"), "1234.56", "EUR"),
    ("1.234,56 €", Some("de-DE"), "1234.56", "EUR"),
    ("12,00 €", Some("de-DE"), "12.00", "EUR"),
    ("€ 12.345.678,9", Some("it-IT"), "12345678.90", "EUR"),
    ("1 234,56 €", Some("fi-FI"), "1234.56", "EUR"),
    ("1\u{a0}234,56\u{a0}€", Some("fr-FR"), "1234.56", "EUR"),
    ("1\u{202f}099,00 €", Some("fr-FR"), "1099.00", "EUR"),
    ("R$ 2.499,90", Some("pt-BR"), "2499.90", "BRL"),
    ("R$ 89,90", None, "89.90", "BRL"),
    ("$1,234.56", Some("en-US"), "1234.56", "USD"),
    ("US$ 1,299.00", None, "1299.00", "USD"),
    ("£12.00", Some("en-GB"), "12.00", "GBP"),
    ("£1,000", None, "1000.00", "GBP"),
    ("C$ 45.5", None, "45.50", "CAD"),
    ("CHF 1'234.50", Some("de-CH"), "1234.50", "CHF"),
    ("1 499 kr", Some("sv-SE"), "1499.00", "SEK"),
    ("129,95 zł", Some("pl-PL"), "129.95", "PLN"),
    ("EUR 1234.50", None, "1234.50", "EUR"),
    ("USD 0.99", None, "0.99", "USD"),
    ("€19.99", None, "19.99", "EUR"),
    ("€19,99", None, "19.99", "EUR"),
    ("€1.234", None, "1234.00", "EUR"),
    ("€0,125", None, "0.125", "EUR"),
];

#[test]
fn per_locale_table() {
    let parser = PriceParser::default();
    for &(text, hint, amount, code) in LOCALE_TABLE {
        let raw = RawPriceText::new(text, hint.map(String::from)).unwrap();
        let got = parser
            .parse_price(&raw, None)
            .unwrap_or_else(|e| panic!("{text:?} ({hint:?}) failed: {e}"));
        let want = Money::new(Decimal::from_str(amount).unwrap(), Currency::new(code).unwrap()).unwrap();
        assert_eq!(got, want, "{text:?} ({hint:?})");
    }
}

#[test]
fn symbol_free_amount_with_page_currency() {
    let parser = PriceParser::default();
    let page = PageContext::from_html(
        r#"<html lang="de"><body><p>Alle Preise in EUR</p><span>19,99</span></body></html>"#,
    );
    let raw = RawPriceText::new("19,99", None).unwrap();
    assert_eq!(
        parser.parse_price(&raw, Some(&page)).unwrap(),
        Money::new(Decimal::from_str("19.99").unwrap(), Currency::EUR).unwrap()
    );
}

fn money_strategy() -> impl Strategy<Value = Money> {
    let codes = ["USD", "EUR", "GBP", "BRL", "CAD", "CHF", "SEK"];
    (1i64..=99_999_999_999i64, 0u32..=4, proptest::sample::select(codes.to_vec())).prop_map(|(units, scale, code)| {
        Money::new(Decimal::new(units, scale), Currency::new(code).unwrap()).unwrap()
    })
}

proptest! {
    #[test]
    fn canonical_round_trip(m in money_strategy()) {
        let parser = PriceParser::default();
        let text = canonical_format(&m);
        let raw = RawPriceText::new(&text, None).unwrap();
        prop_assert_eq!(parser.parse_price(&raw, None).unwrap(), m);
    }

    #[test]
    fn cent_amounts_format_with_two_digits(cents in 1i64..=10_000_000_000i64) {
        let m = Money::new(Decimal::new(cents, 2), Currency::USD).unwrap();
        let text = canonical_format(&m);
        let frac = text.rsplit('.').next().unwrap();
        prop_assert_eq!(frac.len(), 2);
        prop_assert!(!text.contains(','));
    }

    #[test]
    fn locale_duality(body in "[0-9]{1,4}([.,][0-9]{1,4}){0,3}") {
        let parser = PriceParser::default();
        let text = format!("€{body}");
        let read = |hint: &str| parser
            .parse_price(&RawPriceText::new(&text, Some(hint.to_string())).unwrap(), None)
            .ok();
        if let (Some(cont), Some(anglo)) = (read("de-DE"), read("en-US")) {
            let ambiguous = body.contains('.') || body.contains(',');
            prop_assert!(!ambiguous || cont != anglo, "{} read identically as {:?}", text, cont);
        }
    }

    #[test]
    fn parsing_is_pure(body in "[0-9]{1,3}([.,][0-9]{2,3}){0,2}") {
        let parser = PriceParser::default();
        let raw = RawPriceText::new(&format!("£{body}"), None).unwrap();
        prop_assert_eq!(parser.parse_price(&raw, None).ok(), parser.parse_price(&raw, None).ok());
    }
}
