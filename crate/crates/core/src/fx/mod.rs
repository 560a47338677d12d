//! Currency normalization: daily rate windows, reference-currency intervals
//! and the gate that discards differences explainable by exchange rates.

mod gate;
mod ingest;
mod rates;

use chrono::NaiveDate;
use rust_decimal::Decimal;
use thiserror::Error;

pub use gate::{
    currency_gate, currency_gate_prices, gate_intervals, to_reference_interval, wave_date, GateVerdict, RefInterval,
    DISPLAY_ROUNDING,
};
pub use ingest::{spawn_periodic_ingest, RateHandle, RateIngestClient};
pub use rates::{RateTable, RateWindow};

use crate::money::Currency;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FxError {
    #[error("duplicate rate record for {base}->{quote} on {date}")]
    DuplicateRecord {
        date: NaiveDate,
        base: Currency,
        quote: Currency,
    },
    #[error("no rate record involves the reference currency {0}")]
    MissingReferenceCurrency(Currency),
    #[error("no {currency} rate for {date}")]
    MissingRate { currency: Currency, date: NaiveDate },
    #[error("invalid window {base}->{quote} on {date}: need 0 < low ({low}) <= high ({high})")]
    InvalidWindow {
        date: NaiveDate,
        base: Currency,
        quote: Currency,
        low: Decimal,
        high: Decimal,
    },
    #[error("invalid interval [{lo}, {hi}]")]
    InvalidInterval { lo: Decimal, hi: Decimal },
    #[error("rate file line {line}: {message}")]
    InvalidRecord { line: usize, message: String },
    #[error("gate needs at least two observations, got {0}")]
    InsufficientObservations(usize),
    #[error("rate ingestion: {0}")]
    Ingest(String),
    #[error("i/o: {0}")]
    Io(String),
}
