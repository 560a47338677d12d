use std::collections::BTreeMap;

use chrono::NaiveDate;
use rust_decimal::Decimal;
use serde::{Deserialize, Serialize};

use super::AnalyticsError;
use crate::fx::{gate_intervals, to_reference_interval, wave_date, GateVerdict, RateTable, RefInterval};
use crate::money::Money;
use crate::vantage::{GateFlag, PriceObservation};

/// One product in one wave, after the currency gate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProductProfile {
    pub product_uri: String,
    pub wave_id: String,
    pub date: NaiveDate,
    /// One observation per (vantage, profile), repetitions collapsed.
    pub observations: Vec<PriceObservation>,
    /// Reference interval of each observation, same order.
    pub intervals: Vec<RefInterval>,
    /// Interval with the lowest midpoint.
    pub min_price: RefInterval,
    /// Midpoint ratio of the gate's deciding pair when it passed, else 1.
    #[serde(with = "rust_decimal::serde::str")]
    pub max_min_ratio: Decimal,
    pub gate: GateVerdict,
    /// Repetitions at some vantage disagreed.
    pub noise_suspect: bool,
}

impl ProductProfile {
    pub fn domain(&self) -> Option<String> {
        crate::vantage::uri_domain(&self.product_uri)
    }

    pub fn interval_of(&self, vantage: &str) -> Option<RefInterval> {
        self.observations
            .iter()
            .position(|o| o.vantage == vantage)
            .map(|i| self.intervals[i])
    }
}

/// Most frequent price among repetitions; ties go to the lowest.
fn modal(prices: &[Money]) -> Money {
    let mut counts: BTreeMap<(Decimal, [u8; 3]), usize> = BTreeMap::new();
    for m in prices {
        let code: [u8; 3] = m.currency().as_str().as_bytes().try_into().expect("3-letter code");
        *counts.entry((m.amount(), code)).or_default() += 1;
    }
    let best = counts.values().copied().max().unwrap_or(0);
    let (amount, _) = counts
        .iter()
        .find(|(_, c)| **c == best)
        .map(|(k, _)| *k)
        .expect("non-empty");
    *prices.iter().find(|m| m.amount() == amount).expect("present")
}

/// Builds the gated profile of one product-wave.
pub fn product_profile(obs: &[PriceObservation], table: &RateTable) -> Result<ProductProfile, AnalyticsError> {
    let first = obs.first().ok_or(AnalyticsError::InsufficientObservations(0))?;
    if obs
        .iter()
        .any(|o| o.product_uri != first.product_uri || o.wave_id != first.wave_id)
    {
        return Err(AnalyticsError::MixedInput("observations span several products or waves".into()));
    }
    let mut groups: BTreeMap<(String, Option<String>), Vec<&PriceObservation>> = BTreeMap::new();
    for o in obs {
        groups.entry((o.vantage.clone(), o.profile.clone())).or_default().push(o);
    }
    let mut collapsed = Vec::with_capacity(groups.len());
    let mut noise_suspect = false;
    for reps in groups.into_values() {
        let prices: Vec<Money> = reps.iter().map(|o| o.money).collect();
        let chosen = modal(&prices);
        let disagree = prices.iter().any(|p| *p != chosen);
        noise_suspect |= disagree;
        let mut o = reps
            .iter()
            .copied()
            .filter(|o| o.money == chosen)
            .min_by_key(|o| o.repetition)
            .expect("modal price occurs")
            .clone();
        if disagree {
            o.gate_flags.insert(GateFlag::NoiseSuspect);
        }
        collapsed.push(o);
    }
    if collapsed.len() < 2 {
        return Err(AnalyticsError::InsufficientObservations(collapsed.len()));
    }
    let date = wave_date(&collapsed).expect("non-empty");
    let intervals = collapsed
        .iter()
        .map(|o| to_reference_interval(&o.money, table, date))
        .collect::<Result<Vec<_>, _>>()?;
    let gate = gate_intervals(&intervals)?;
    let min_price = *intervals
        .iter()
        .min_by_key(|i| i.midpoint())
        .expect("at least two intervals");
    let max_min_ratio = if gate.passed {
        gate.observed_gap
    } else {
        Decimal::ONE
    };
    Ok(ProductProfile {
        product_uri: first.product_uri.clone(),
        wave_id: first.wave_id.clone(),
        date,
        observations: collapsed,
        intervals,
        min_price,
        max_min_ratio,
        gate,
        noise_suspect,
    })
}

/// Groups observations by (product, wave) and profiles each group with at
/// least two vantages; groups that cannot be profiled are returned with the reason.
pub fn profiles_from_observations(
    obs: impl IntoIterator<Item = PriceObservation>,
    table: &RateTable,
) -> (Vec<ProductProfile>, Vec<(String, String, AnalyticsError)>) {
    let mut groups: BTreeMap<(String, String), Vec<PriceObservation>> = BTreeMap::new();
    for o in obs {
        groups.entry((o.product_uri.clone(), o.wave_id.clone())).or_default().push(o);
    }
    let mut profiles = Vec::new();
    let mut rejected = Vec::new();
    for ((uri, wave), group) in groups {
        match product_profile(&group, table) {
            Ok(p) => profiles.push(p),
            Err(e) => rejected.push((uri, wave, e)),
        }
    }
    (profiles, rejected)
}
