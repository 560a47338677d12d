use std::collections::{BTreeSet, HashMap};
use std::io::{BufRead, Write};
use std::str::FromStr;

use chrono::NaiveDate;
use rust_decimal::Decimal;
use serde::{Deserialize, Serialize};

use super::FxError;
use crate::money::Currency;

/// Lowest and highest quote of `base` in units of `quote` over one UTC day.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RateWindow {
    pub date: NaiveDate,
    pub base: Currency,
    pub quote: Currency,
    #[serde(with = "rust_decimal::serde::str")]
    pub low: Decimal,
    #[serde(with = "rust_decimal::serde::str")]
    pub high: Decimal,
}

impl RateWindow {
    pub fn new(date: NaiveDate, base: Currency, quote: Currency, low: Decimal, high: Decimal) -> Result<Self, FxError> {
        if low <= Decimal::ZERO || low > high {
            return Err(FxError::InvalidWindow {
                date,
                base,
                quote,
                low,
                high,
            });
        }
        Ok(RateWindow {
            date,
            base,
            quote,
            low,
            high,
        })
    }

    /// The same window quoted the other way round: `(1/high, 1/low)`.
    pub fn inverse(&self) -> RateWindow {
        RateWindow {
            date: self.date,
            base: self.quote,
            quote: self.base,
            low: Decimal::ONE / self.high,
            high: Decimal::ONE / self.low,
        }
    }

    /// Whether `rate` (base→quote) lies inside the window.
    pub fn contains(&self, rate: Decimal) -> bool {
        self.low <= rate && rate <= self.high
    }

    /// One record line: `date,base,quote,low,high`.
    pub fn to_record(&self) -> String {
        format!("{},{},{},{},{}", self.date, self.base, self.quote, self.low, self.high)
    }

    pub fn parse_record(line: &str) -> Result<RateWindow, String> {
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let [date, base, quote, low, high] = fields.as_slice() else {
            return Err(format!("expected 5 comma-separated fields, got {}", fields.len()));
        };
        let date = NaiveDate::parse_from_str(date, "%Y-%m-%d").map_err(|e| format!("bad date {date:?}: {e}"))?;
        let base = Currency::new(base).map_err(|e| e.to_string())?;
        let quote = Currency::new(quote).map_err(|e| e.to_string())?;
        let low = Decimal::from_str(low).map_err(|e| format!("bad low {low:?}: {e}"))?;
        let high = Decimal::from_str(high).map_err(|e| format!("bad high {high:?}: {e}"))?;
        RateWindow::new(date, base, quote, low, high).map_err(|e| e.to_string())
    }
}

type Key = (NaiveDate, Currency, Currency);

/// Immutable table of daily rate windows keyed by `(date, base, quote)`.
///
/// Every loaded record's inverse is available; windows against the
/// reference currency compose into cross rates.
#[derive(Debug, Clone)]
pub struct RateTable {
    reference: Currency,
    windows: HashMap<Key, RateWindow>,
    loaded: Vec<RateWindow>,
}

impl RateTable {
    pub fn load<I>(records: I, reference: Currency) -> Result<RateTable, FxError>
    where
        I: IntoIterator<Item = RateWindow>,
    {
        let mut windows = HashMap::new();
        let mut loaded = Vec::new();
        for w in records {
            let key = (w.date, w.base, w.quote);
            if windows.insert(key, w).is_some() {
                return Err(FxError::DuplicateRecord {
                    date: w.date,
                    base: w.base,
                    quote: w.quote,
                });
            }
            loaded.push(w);
        }
        if !loaded.iter().any(|w| w.base == reference || w.quote == reference) {
            return Err(FxError::MissingReferenceCurrency(reference));
        }
        for w in &loaded {
            let inv = w.inverse();
            windows.entry((inv.date, inv.base, inv.quote)).or_insert(inv);
        }
        Ok(RateTable {
            reference,
            windows,
            loaded,
        })
    }

    /// Reads `date,base,quote,low,high` lines; blank lines and `#` comments are skipped.
    pub fn from_reader<R: BufRead>(reader: R, reference: Currency) -> Result<RateTable, FxError> {
        let mut records = Vec::new();
        for (idx, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| FxError::Io(e.to_string()))?;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let w = RateWindow::parse_record(trimmed).map_err(|message| FxError::InvalidRecord {
                line: idx + 1,
                message,
            })?;
            records.push(w);
        }
        RateTable::load(records, reference)
    }

    pub fn parse(text: &str, reference: Currency) -> Result<RateTable, FxError> {
        RateTable::from_reader(text.as_bytes(), reference)
    }

    pub fn reference(&self) -> Currency {
        self.reference
    }

    /// Records as loaded, in input order (synthesized inverses excluded).
    pub fn records(&self) -> &[RateWindow] {
        &self.loaded
    }

    pub fn write_records<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for w in &self.loaded {
            writeln!(out, "{}", w.to_record())?;
        }
        Ok(())
    }

    pub fn dates(&self) -> BTreeSet<NaiveDate> {
        self.loaded.iter().map(|w| w.date).collect()
    }

    pub fn currencies(&self) -> BTreeSet<Currency> {
        self.loaded.iter().flat_map(|w| [w.base, w.quote]).collect()
    }

    /// `currency`→reference window on `date`.
    pub fn lookup(&self, currency: Currency, date: NaiveDate) -> Option<RateWindow> {
        self.window(currency, self.reference, date)
    }

    /// `from`→`to` window on `date`: stored or inverse record, else the
    /// interval composition through the reference currency.
    pub fn window(&self, from: Currency, to: Currency, date: NaiveDate) -> Option<RateWindow> {
        if from == to {
            return Some(RateWindow {
                date,
                base: from,
                quote: to,
                low: Decimal::ONE,
                high: Decimal::ONE,
            });
        }
        if let Some(w) = self.windows.get(&(date, from, to)) {
            return Some(*w);
        }
        if from == self.reference || to == self.reference {
            return None;
        }
        let first = self.windows.get(&(date, from, self.reference))?;
        let second = self.windows.get(&(date, self.reference, to))?;
        Some(RateWindow {
            date,
            base: from,
            quote: to,
            low: first.low * second.low,
            high: first.high * second.high,
        })
    }

    /// New table with `more` records added.
    pub fn extended(&self, more: impl IntoIterator<Item = RateWindow>) -> Result<RateTable, FxError> {
        RateTable::load(self.loaded.iter().copied().chain(more), self.reference)
    }
}
