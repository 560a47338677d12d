//! Currency-symbol table and locale number conventions.

use std::collections::{BTreeSet, HashMap};

use super::ExtractError;
use crate::money::Currency;

const DEFAULT_CONFIG: &str = include_str!("../../assets/currencies.conf");

/// How a locale writes numbers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NumberConvention {
    pub decimal: char,
    pub group: GroupSeparator,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GroupSeparator {
    Char(char),
    /// Any space character, including no-break variants.
    Space,
}

impl NumberConvention {
    pub const ANGLOPHONE: NumberConvention = NumberConvention {
        decimal: '.',
        group: GroupSeparator::Char(','),
    };
    pub const CONTINENTAL: NumberConvention = NumberConvention {
        decimal: ',',
        group: GroupSeparator::Char('.'),
    };
}

#[derive(Debug, Clone)]
pub struct SymbolRecord {
    pub symbol: String,
    pub code: Currency,
    pub default_locale: String,
}

/// Parsed form of the currency configuration file.
#[derive(Debug, Clone)]
pub struct CurrencyConfig {
    symbols: Vec<SymbolRecord>,
    locales: HashMap<String, NumberConvention>,
    tlds: HashMap<String, Currency>,
    known: BTreeSet<Currency>,
}

impl Default for CurrencyConfig {
    fn default() -> Self {
        CurrencyConfig::parse(DEFAULT_CONFIG).expect("bundled currency config is valid")
    }
}

impl CurrencyConfig {
    pub fn parse(text: &str) -> Result<Self, ExtractError> {
        let mut symbols = Vec::new();
        let mut locales = HashMap::new();
        let mut tlds = HashMap::new();
        let mut known = BTreeSet::new();

        for (idx, raw_line) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw_line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            let bad = |msg: &str| ExtractError::Config {
                line: line_no,
                message: msg.to_string(),
            };
            let code = |s: &str| Currency::new(s).map_err(|e| bad(&e.to_string()));
            match fields.as_slice() {
                ["locale", tag, decimal, group] => {
                    let decimal = single_char(decimal).ok_or_else(|| bad("decimal separator must be one character"))?;
                    let group = match *group {
                        "space" => GroupSeparator::Space,
                        g => GroupSeparator::Char(
                            single_char(g).ok_or_else(|| bad("group separator must be one character or `space`"))?,
                        ),
                    };
                    if GroupSeparator::Char(decimal) == group {
                        return Err(bad("decimal and group separators must differ"));
                    }
                    locales.insert(tag.to_ascii_lowercase(), NumberConvention { decimal, group });
                }
                ["tld", tld, iso] => {
                    let c = code(iso)?;
                    known.insert(c);
                    tlds.insert(tld.to_ascii_lowercase(), c);
                }
                [symbol, iso, locale] => {
                    let c = code(iso)?;
                    known.insert(c);
                    symbols.push(SymbolRecord {
                        symbol: symbol.to_string(),
                        code: c,
                        default_locale: locale.to_string(),
                    });
                }
                _ => return Err(bad("expected `<symbol> <code> <locale>`, `locale ...` or `tld ...`")),
            }
        }
        // Longest symbols first so "R$" wins over "$".
        symbols.sort_by(|a, b| b.symbol.chars().count().cmp(&a.symbol.chars().count()));
        Ok(CurrencyConfig {
            symbols,
            locales,
            tlds,
            known,
        })
    }

    pub fn is_known(&self, c: Currency) -> bool {
        self.known.contains(&c)
    }

    pub fn known_codes(&self) -> impl Iterator<Item = Currency> + '_ {
        self.known.iter().copied()
    }

    /// Symbol records in match-priority order (longest symbol first, file
    /// order among equal lengths).
    pub fn symbols(&self) -> &[SymbolRecord] {
        &self.symbols
    }

    /// Codes a symbol may denote, in file order.
    pub fn codes_for_symbol(&self, symbol: &str) -> Vec<Currency> {
        self.symbols
            .iter()
            .filter(|r| r.symbol == symbol)
            .map(|r| r.code)
            .collect()
    }

    pub fn currency_for_tld(&self, tld: &str) -> Option<Currency> {
        self.tlds.get(&tld.to_ascii_lowercase()).copied()
    }

    /// Number convention for a locale tag, falling back to the first locale
    /// sharing the language subtag.
    pub fn convention(&self, tag: &str) -> Option<NumberConvention> {
        let tag = tag.trim().replace('_', "-").to_ascii_lowercase();
        if let Some(c) = self.locales.get(&tag) {
            return Some(*c);
        }
        let lang = tag.split('-').next()?;
        let mut candidates: Vec<(&String, &NumberConvention)> = self
            .locales
            .iter()
            .filter(|(k, _)| k.split('-').next() == Some(lang))
            .collect();
        candidates.sort_by(|a, b| a.0.cmp(b.0));
        candidates.first().map(|(_, c)| **c)
    }

    /// Default locale of the first record for `code`.
    pub fn default_locale(&self, code: Currency) -> Option<&str> {
        self.symbols
            .iter()
            .find(|r| r.code == code)
            .map(|r| r.default_locale.as_str())
    }
}

fn single_char(s: &str) -> Option<char> {
    let mut it = s.chars();
    let c = it.next()?;
    it.next().is_none().then_some(c)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_config_loads() {
        let cfg = CurrencyConfig::default();
        assert!(cfg.is_known(Currency::EUR));
        assert_eq!(
            cfg.codes_for_symbol("$"),
            vec![Currency::USD, Currency::new("CAD").unwrap(), Currency::new("AUD").unwrap(), Currency::new("MXN").unwrap()]
        );
        assert_eq!(cfg.convention("de-DE"), Some(NumberConvention::CONTINENTAL));
        assert_eq!(cfg.convention("en_US"), Some(NumberConvention::ANGLOPHONE));
        assert_eq!(cfg.convention("fi").unwrap().group, GroupSeparator::Space);
        assert_eq!(cfg.currency_for_tld("CA"), Some(Currency::new("CAD").unwrap()));
    }

    #[test]
    fn longer_symbols_sort_first() {
        let cfg = CurrencyConfig::default();
        let pos = |s: &str| cfg.symbols().iter().position(|r| r.symbol == s).unwrap();
        assert!(pos("R$") < pos("$"));
        assert!(pos("US$") < pos("$"));
    }

    #[test]
    fn malformed_lines_report_line_numbers() {
        let err = CurrencyConfig::parse("€ EUR de-DE\nlocale xx-XX .. ,\n").unwrap_err();
        assert!(matches!(err, ExtractError::Config { line: 2, .. }));
        let err = CurrencyConfig::parse("€ eur de-DE\n").unwrap_err();
        assert!(matches!(err, ExtractError::Config { line: 1, .. }));
        let err = CurrencyConfig::parse("locale en-US . .\n").unwrap_err();
        assert!(matches!(err, ExtractError::Config { line: 1, .. }));
    }
}
