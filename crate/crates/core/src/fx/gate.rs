use chrono::NaiveDate;
use rust_decimal::Decimal;
use rust_decimal_macros::dec;
use serde::{Deserialize, Serialize};

use super::{FxError, RateTable};
use crate::money::Money;
use crate::vantage::PriceObservation;

/// Half a cent: how far a displayed cent-granular price can sit from the
/// amount it was rounded from.
pub const DISPLAY_ROUNDING: Decimal = dec!(0.005);

/// The same for prices shown with sub-cent digits.
const FINE_DISPLAY_ROUNDING: Decimal = dec!(0.00005);

/// Range of reference-currency values one observed price can stand for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RefInterval {
    #[serde(with = "rust_decimal::serde::str")]
    pub lo: Decimal,
    #[serde(with = "rust_decimal::serde::str")]
    pub hi: Decimal,
}

impl RefInterval {
    pub fn new(lo: Decimal, hi: Decimal) -> Result<Self, FxError> {
        if lo <= Decimal::ZERO || lo > hi {
            return Err(FxError::InvalidInterval { lo, hi });
        }
        Ok(RefInterval { lo, hi })
    }

    pub fn point(v: Decimal) -> Result<Self, FxError> {
        RefInterval::new(v, v)
    }

    pub fn midpoint(&self) -> Decimal {
        (self.lo + self.hi) / Decimal::TWO
    }

    pub fn scaled(&self, k: Decimal) -> RefInterval {
        RefInterval {
            lo: self.lo * k,
            hi: self.hi * k,
        }
    }

    /// Whether `other` lies strictly above this interval.
    pub fn strictly_below(&self, other: &RefInterval) -> bool {
        other.lo > self.hi
    }
}

/// Reference-currency interval of `m` under the `date` window.
///
/// The displayed amount is widened by its rounding half-unit before
/// conversion, so the interval covers every unrounded amount at every rate in
/// the window. Rounding is bounded in the displayed currency, not the
/// reference one.
pub fn to_reference_interval(m: &Money, table: &RateTable, date: NaiveDate) -> Result<RefInterval, FxError> {
    let half = if m.is_cent_granular() { DISPLAY_ROUNDING } else { FINE_DISPLAY_ROUNDING };
    let (lo, hi) = (m.amount() - half, m.amount() + half);
    if m.currency() == table.reference() {
        return RefInterval::new(lo, hi);
    }
    let w = table.lookup(m.currency(), date).ok_or(FxError::MissingRate {
        currency: m.currency(),
        date,
    })?;
    RefInterval::new(lo * w.low, hi * w.high)
}

/// Outcome of the currency gate over one product's observations.
///
/// `passed` holds when some observation's interval lies strictly above
/// another's: no pair of rates inside the day's windows reconciles them. For the deciding pair, `observed_gap` is the
/// price ratio at mid-window rates and `max_currency_gap` the largest ratio
/// the rate windows (plus rounding tolerance) could produce on their own, so
/// `passed ⇔ observed_gap > max_currency_gap`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GateVerdict {
    pub passed: bool,
    #[serde(with = "rust_decimal::serde::str")]
    pub observed_gap: Decimal,
    #[serde(with = "rust_decimal::serde::str")]
    pub max_currency_gap: Decimal,
    /// `lo(dearer) / hi(cheaper)` for the deciding pair.
    #[serde(with = "rust_decimal::serde::str")]
    pub pessimistic_ratio: Decimal,
    /// Indices of the deciding pair in the input order.
    pub cheaper: usize,
    pub dearer: usize,
}

/// Gate over reference intervals; needs at least two.
pub fn gate_intervals(intervals: &[RefInterval]) -> Result<GateVerdict, FxError> {
    if intervals.len() < 2 {
        return Err(FxError::InsufficientObservations(intervals.len()));
    }
    // Deciding pair: the largest pessimistic ratio among disjoint pairs, or
    // overall when no pair is disjoint.
    let mut best: Option<(bool, Decimal, usize, usize)> = None;
    for (i, low) in intervals.iter().enumerate() {
        for (j, high) in intervals.iter().enumerate() {
            if i == j {
                continue;
            }
            let key = (low.strictly_below(high), high.lo / low.hi);
            if best.is_none_or(|(d, r, _, _)| key > (d, r)) {
                best = Some((key.0, key.1, i, j));
            }
        }
    }
    let (_, pessimistic_ratio, i, j) = best.expect("at least two intervals");
    let (cheap, dear) = (intervals[i], intervals[j]);
    let observed_gap = dear.midpoint() / cheap.midpoint();
    let max_currency_gap = (cheap.hi / cheap.midpoint()) * (dear.midpoint() / dear.lo);
    Ok(GateVerdict {
        passed: cheap.strictly_below(&dear),
        observed_gap,
        max_currency_gap,
        pessimistic_ratio,
        cheaper: i,
        dearer: j,
    })
}

pub fn currency_gate_prices(prices: &[Money], date: NaiveDate, table: &RateTable) -> Result<GateVerdict, FxError> {
    let intervals = prices
        .iter()
        .map(|m| to_reference_interval(m, table, date))
        .collect::<Result<Vec<_>, _>>()?;
    gate_intervals(&intervals)
}

/// Gate over one wave's observations, using rates for the wave's first UTC day.
pub fn currency_gate(obs: &[PriceObservation], table: &RateTable) -> Result<GateVerdict, FxError> {
    let date = wave_date(obs).ok_or(FxError::InsufficientObservations(0))?;
    let prices: Vec<Money> = obs.iter().map(|o| o.money).collect();
    currency_gate_prices(&prices, date, table)
}

/// UTC calendar day of the earliest observation.
pub fn wave_date(obs: &[PriceObservation]) -> Option<NaiveDate> {
    obs.iter().map(|o| o.fetched_at).min().map(|t| t.date_naive())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::money::Currency;

    fn day() -> NaiveDate {
        NaiveDate::from_ymd_opt(2013, 2, 1).unwrap()
    }

    fn table() -> RateTable {
        RateTable::parse("2013-02-01,EUR,USD,1.30,1.32\n", Currency::USD).unwrap()
    }

    fn m(amount: Decimal, c: Currency) -> Money {
        Money::new(amount, c).unwrap()
    }

    #[test]
    fn interval_conversion() {
        let i = to_reference_interval(&m(dec!(100), Currency::EUR), &table(), day()).unwrap();
        assert_eq!((i.lo, i.hi), (dec!(99.995) * dec!(1.30), dec!(100.005) * dec!(1.32)));
        let i = to_reference_interval(&m(dec!(50), Currency::USD), &table(), day()).unwrap();
        assert_eq!((i.lo, i.hi), (dec!(49.995), dec!(50.005)));
        let i = to_reference_interval(&m(dec!(50.0001), Currency::USD), &table(), day()).unwrap();
        assert_eq!((i.lo, i.hi), (dec!(50.00005), dec!(50.00015)));
        assert!(matches!(
            to_reference_interval(&m(dec!(10), Currency::GBP), &table(), day()),
            Err(FxError::MissingRate { .. })
        ));
    }

    #[test]
    fn overlapping_intervals_fail_the_gate() {
        let v = currency_gate_prices(
            &[m(dec!(100), Currency::EUR), m(dec!(131), Currency::USD)],
            day(),
            &table(),
        )
        .unwrap();
        assert!(!v.passed);
        assert!(v.observed_gap <= v.max_currency_gap);
    }

    #[test]
    fn identical_prices() {
        let v = currency_gate_prices(&[m(dec!(100), Currency::USD), m(dec!(100), Currency::USD)], day(), &table())
            .unwrap();
        assert!(!v.passed);
        assert_eq!(v.observed_gap, Decimal::ONE);
    }

    #[test]
    fn disjoint_intervals_pass() {
        let v = currency_gate_prices(
            &[m(dec!(100), Currency::EUR), m(dec!(150), Currency::USD)],
            day(),
            &table(),
        )
        .unwrap();
        assert!(v.passed);
        assert!(v.observed_gap > v.max_currency_gap);
        assert_eq!((v.cheaper, v.dearer), (0, 1));
        assert_eq!(v.pessimistic_ratio, dec!(149.995) / (dec!(100.005) * dec!(1.32)));
    }

    #[test]
    fn rounding_sized_gaps_do_not_pass() {
        let usd = |a| m(a, Currency::USD);
        // 10.005 can display as either neighbour.
        let v = currency_gate_prices(&[usd(dec!(10.00)), usd(dec!(10.01))], day(), &table()).unwrap();
        assert!(!v.passed);
        let v = currency_gate_prices(&[usd(dec!(10.00)), usd(dec!(10.02))], day(), &table()).unwrap();
        assert!(v.passed);
        // Half a euro cent is worth more than half a dollar cent.
        let eur = m(dec!(10.00), Currency::EUR);
        let v = currency_gate_prices(&[eur, usd(dec!(13.21))], day(), &table()).unwrap();
        assert!(!v.passed);
    }

    #[test]
    fn any_disjoint_pair_decides() {
        let v = gate_intervals(&[
            RefInterval::point(dec!(0.010)).unwrap(),
            RefInterval::point(dec!(0.012)).unwrap(),
            RefInterval::point(dec!(1000)).unwrap(),
            RefInterval::point(dec!(1000.006)).unwrap(),
        ])
        .unwrap();
        assert!(v.passed);
        assert!(v.observed_gap > v.max_currency_gap);
    }

    #[test]
    fn single_observation_is_rejected() {
        assert!(matches!(
            gate_intervals(&[RefInterval::point(dec!(1)).unwrap()]),
            Err(FxError::InsufficientObservations(1))
        ));
    }
}
