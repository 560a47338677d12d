//! Currency detection from price text and surrounding page evidence.

use scraper::{Html, Selector};
use serde::{Deserialize, Serialize};

use super::config::CurrencyConfig;
use super::{visible_text, ExtractError, RawPriceText};
use crate::money::Currency;

/// Page-level evidence used to settle currencies the price text leaves open.
#[derive(Debug, Clone, Default)]
pub struct PageContext {
    /// Visible text of the page, whitespace-normalized.
    pub text: String,
    /// Currency declared in product metadata (`itemprop="priceCurrency"` and similar).
    pub declared_currency: Option<String>,
    /// Host of the page's canonical URL, if it names one.
    pub host: Option<String>,
}

impl PageContext {
    pub fn from_html(html: &str) -> Self {
        let doc = Html::parse_document(html);
        let text = visible_text(doc.root_element());

        let meta = Selector::parse(
            r#"meta[itemprop="priceCurrency"], meta[property="product:price:currency"], meta[property="og:price:currency"]"#,
        )
        .expect("static selector");
        let declared_currency = doc
            .select(&meta)
            .find_map(|m| m.value().attr("content").map(|s| s.trim().to_string()));

        let canonical = Selector::parse(r#"link[rel="canonical"], meta[property="og:url"]"#).expect("static selector");
        let host = doc.select(&canonical).find_map(|el| {
            let href = el.value().attr("href").or_else(|| el.value().attr("content"))?;
            url::Url::parse(href).ok()?.host_str().map(str::to_string)
        });

        PageContext {
            text,
            declared_currency,
            host,
        }
    }

    pub fn from_text(text: &str) -> Self {
        PageContext {
            text: super::normalize_whitespace(text),
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CurrencySource {
    /// ISO code written in the price text itself.
    IsoCode,
    /// Unambiguous symbol.
    Symbol,
    /// Ambiguous symbol or bare number settled by the page.
    PageContext,
    /// Settled by the canonical host's country TLD.
    TldHint,
    /// Ambiguous symbol with no settling evidence; first configured code used.
    Fallback,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CurrencyMatch {
    pub code: Currency,
    pub source: CurrencySource,
}

impl CurrencyMatch {
    pub fn is_ambiguous(&self) -> bool {
        self.source == CurrencySource::Fallback
    }
}

pub fn detect_currency(
    config: &CurrencyConfig,
    raw: &RawPriceText,
    page: Option<&PageContext>,
) -> Result<CurrencyMatch, ExtractError> {
    let text = raw.text();

    if let Some((_, code)) = iso_codes_in(config, text).into_iter().next() {
        return Ok(CurrencyMatch {
            code,
            source: CurrencySource::IsoCode,
        });
    }

    let candidates = match find_symbol(config, text) {
        Some(symbol) => {
            let codes = config.codes_for_symbol(symbol);
            if codes.len() == 1 {
                return Ok(CurrencyMatch {
                    code: codes[0],
                    source: CurrencySource::Symbol,
                });
            }
            Some(codes)
        }
        None => None,
    };

    if let Some(page) = page {
        let allowed = |c: Currency| candidates.as_ref().is_none_or(|cs| cs.contains(&c));

        if let Some(declared) = page.declared_currency.as_deref().and_then(|s| Currency::new(s).ok()) {
            if config.is_known(declared) && allowed(declared) {
                return Ok(CurrencyMatch {
                    code: declared,
                    source: CurrencySource::PageContext,
                });
            }
        }

        let mentions: Vec<(usize, Currency)> = iso_codes_in(config, &page.text)
            .into_iter()
            .filter(|(_, c)| allowed(*c))
            .collect();
        if !mentions.is_empty() {
            let mut distinct: Vec<Currency> = mentions.iter().map(|(_, c)| *c).collect();
            distinct.sort();
            distinct.dedup();
            let chosen = if distinct.len() == 1 {
                Some(distinct[0])
            } else {
                page.text.find(text).map(|anchor| {
                    mentions
                        .iter()
                        .min_by_key(|(pos, _)| pos.abs_diff(anchor))
                        .map(|(_, c)| *c)
                        .expect("mentions is non-empty")
                })
            };
            if let Some(code) = chosen {
                return Ok(CurrencyMatch {
                    code,
                    source: CurrencySource::PageContext,
                });
            }
        }

        if let Some(code) = page
            .host
            .as_deref()
            .and_then(|h| h.rsplit('.').next())
            .and_then(|tld| config.currency_for_tld(tld))
            .filter(|c| allowed(*c))
        {
            return Ok(CurrencyMatch {
                code,
                source: CurrencySource::TldHint,
            });
        }
    }

    match candidates {
        Some(codes) => Ok(CurrencyMatch {
            code: codes[0],
            source: CurrencySource::Fallback,
        }),
        None => Err(ExtractError::UnknownCurrency(text.to_string())),
    }
}

/// Known ISO codes appearing as standalone words, with byte offsets.
fn iso_codes_in(config: &CurrencyConfig, text: &str) -> Vec<(usize, Currency)> {
    let bytes = text.as_bytes();
    let mut found = Vec::new();
    let mut i = 0;
    while i + 3 <= bytes.len() {
        let window = &bytes[i..i + 3];
        let before_ok = i == 0 || !bytes[i - 1].is_ascii_alphabetic();
        let after_ok = i + 3 == bytes.len() || !bytes[i + 3].is_ascii_alphabetic();
        if before_ok && after_ok && window.iter().all(u8::is_ascii_uppercase) {
            if let Ok(code) = Currency::new(std::str::from_utf8(window).expect("ascii")) {
                if config.is_known(code) {
                    found.push((i, code));
                    i += 3;
                    continue;
                }
            }
        }
        i += 1;
    }
    found
}

/// First configured symbol in `text`, longest match at each position.
fn find_symbol<'c>(config: &'c CurrencyConfig, text: &str) -> Option<&'c str> {
    for (pos, _) in text.char_indices() {
        for rec in config.symbols() {
            let sym = rec.symbol.as_str();
            if !text[pos..].starts_with(sym) {
                continue;
            }
            let alphabetic = sym.chars().any(char::is_alphabetic);
            if alphabetic {
                let before = text[..pos].chars().next_back();
                let after = text[pos + sym.len()..].chars().next();
                if before.is_some_and(char::is_alphabetic) || after.is_some_and(char::is_alphabetic) {
                    continue;
                }
            }
            return Some(sym);
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    fn detect(text: &str, page: Option<&PageContext>) -> Result<CurrencyMatch, ExtractError> {
        let cfg = CurrencyConfig::default();
        detect_currency(&cfg, &RawPriceText::new(text, None).unwrap(), page)
    }

    fn cur(s: &str) -> Currency {
        Currency::new(s).unwrap()
    }

    #[test]
    fn unambiguous_symbol() {
        let m = detect("£12.00", None).unwrap();
        assert_eq!(m.code, Currency::GBP);
        assert_eq!(m.source, CurrencySource::Symbol);
        assert_eq!(detect("R$ 1.234,56", None).unwrap().code, cur("BRL"));
        assert_eq!(detect("12 kr", None).unwrap().code, cur("SEK"));
    }

    #[test]
    fn explicit_iso_code_near_price_wins_for_dollar() {
        let page = PageContext::from_text("Winter jacket. Price $12.00 CAD. Ships from Toronto.");
        let m = detect("$12.00", Some(&page)).unwrap();
        assert_eq!(m.code, cur("CAD"));
        assert_eq!(m.source, CurrencySource::PageContext);
    }

    #[test]
    fn nearest_iso_mention_is_chosen() {
        let page = PageContext::from_text("USD accepted at checkout ..................................... $12.00 AUD");
        assert_eq!(detect("$12.00", Some(&page)).unwrap().code, cur("AUD"));
    }

    #[test]
    fn bare_number_is_unknown() {
        assert!(matches!(detect("12.00", None), Err(ExtractError::UnknownCurrency(_))));
        let page = PageContext::from_text("nothing to see");
        assert!(matches!(detect("12.00", Some(&page)), Err(ExtractError::UnknownCurrency(_))));
    }

    #[test]
    fn bare_number_takes_page_currency() {
        let page = PageContext::from_text("Alle Preise in EUR inkl. MwSt. 19,99");
        assert_eq!(detect("19,99", Some(&page)).unwrap().code, Currency::EUR);
    }

    #[test]
    fn ambiguous_dollar_without_context_is_flagged() {
        let m = detect("$1,234.56", None).unwrap();
        assert_eq!(m.code, Currency::USD);
        assert!(m.is_ambiguous());
    }

    #[test]
    fn tld_and_metadata_hints() {
        let html = r#"<html><head><link rel="canonical" href="https://shop.example.ca/p/1"></head><body><span>$5.00</span></body></html>"#;
        let page = PageContext::from_html(html);
        let m = detect("$5.00", Some(&page)).unwrap();
        assert_eq!((m.code, m.source), (cur("CAD"), CurrencySource::TldHint));

        let html = r#"<html><head><meta itemprop="priceCurrency" content="AUD"></head><body>$5.00</body></html>"#;
        let page = PageContext::from_html(html);
        assert_eq!(detect("$5.00", Some(&page)).unwrap().code, cur("AUD"));
    }

    #[test]
    fn iso_code_must_be_a_whole_word() {
        // "EURO" is not the code EUR.
        assert!(detect("EURO 12.00", None).is_err());
        assert_eq!(detect("12.00 EUR", None).unwrap().code, Currency::EUR);
    }
}
