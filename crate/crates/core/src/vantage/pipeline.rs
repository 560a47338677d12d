//! Shared measurement path for crowd checks and crawl waves: barrier fetch,
//! snapshot, extraction, flagging and persistence.

use std::collections::{BTreeSet, HashMap};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::store::{ObservationStore, StoreEvent};
use super::{Coordinator, FetchResult, FetchSlot, GateFlag, PriceObservation, VantageError};
use crate::extract::{PriceParser, PriceSelector};
use crate::money::Money;

/// One barrier round of one product.
#[derive(Debug, Clone)]
pub struct WaveSpec {
    pub check_id: String,
    pub wave_id: String,
    pub repetition: u32,
    pub uri: String,
    pub selector: PriceSelector,
    pub slots: Vec<FetchSlot>,
}

impl WaveSpec {
    /// Barrier slot prefix; unique per (check, repetition).
    fn round_id(&self) -> String {
        format!("{}.r{}", self.check_id, self.repetition)
    }
}

/// A fetch result that produced no observation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FetchFailure {
    pub vantage: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile: Option<String>,
    pub reason: String,
}

#[derive(Debug, Clone, Default)]
pub struct WaveOutcome {
    pub results: Vec<FetchResult>,
    pub observations: Vec<PriceObservation>,
    pub failures: Vec<FetchFailure>,
}

/// Prices seen earlier for the same check, keyed by (vantage, profile).
pub type PriorPrices = HashMap<(String, Option<String>), Money>;

#[derive(Clone)]
pub struct Pipeline {
    pub coordinator: Coordinator,
    pub store: Arc<ObservationStore>,
    pub parser: PriceParser,
}

impl Pipeline {
    pub fn new(coordinator: Coordinator, store: Arc<ObservationStore>, parser: PriceParser) -> Self {
        Pipeline {
            coordinator,
            store,
            parser,
        }
    }

    /// Fans out, extracts and persists one round. A quorum failure still
    /// records its per-vantage failures before being returned.
    pub async fn run_wave(&self, spec: &WaveSpec, prior: &PriorPrices) -> Result<WaveOutcome, VantageError> {
        let fetched = self
            .coordinator
            .fan_out_slots(
                &spec.round_id(),
                &spec.slots,
                &spec.uri,
                &spec.selector,
                self.coordinator.config().sync_window,
            )
            .await;
        match fetched {
            Ok(results) => self.collect_and_extract(spec, results, prior),
            Err(VantageError::QuorumFailure { ok, results }) => {
                let outcome = self.collect_and_extract(spec, results.clone(), prior)?;
                tracing::warn!(check = %spec.check_id, ok, "quorum failure");
                Err(VantageError::QuorumFailure {
                    ok,
                    results: outcome.results,
                })
            }
            Err(e) => Err(e),
        }
    }

    /// Runs every ok result through selector and parser, stores snapshots
    /// and observations, and logs the failures with their reasons.
    pub fn collect_and_extract(
        &self,
        spec: &WaveSpec,
        results: Vec<FetchResult>,
        prior: &PriorPrices,
    ) -> Result<WaveOutcome, VantageError> {
        let mut observations = Vec::new();
        let mut failures = Vec::new();
        for r in &results {
            let fail = |reason: String| FetchFailure {
                vantage: r.vantage.clone(),
                profile: r.profile.clone(),
                reason,
            };
            let page = match (&r.page, r.is_ok()) {
                (Some(page), true) => page,
                _ => {
                    failures.push(fail(match &r.detail {
                        Some(d) => format!("{}: {d}", r.status),
                        None => r.status.to_string(),
                    }));
                    continue;
                }
            };
            let snapshot_ref = self.store.snapshots().put(page)?;
            let money = match self.parser.extract(page, &spec.selector) {
                Ok(m) => m,
                Err(e) => {
                    failures.push(fail(e.to_string()));
                    continue;
                }
            };
            let mut gate_flags = disclosure_flags(page);
            if prior
                .get(&(r.vantage.clone(), r.profile.clone()))
                .is_some_and(|p| *p != money)
            {
                gate_flags.insert(GateFlag::NoiseSuspect);
            }
            observations.push(PriceObservation {
                check_id: spec.check_id.clone(),
                wave_id: spec.wave_id.clone(),
                repetition: spec.repetition,
                product_uri: spec.uri.clone(),
                selector: spec.selector.clone(),
                vantage: r.vantage.clone(),
                profile: r.profile.clone(),
                money,
                fetched_at: r.started_at.unwrap_or_else(chrono::Utc::now),
                fetch_latency_ms: r.latency_ms,
                snapshot_ref,
                gate_flags,
            });
        }
        self.store.append_observations(&observations)?;
        for f in &failures {
            tracing::debug!(check = %spec.check_id, vantage = %f.vantage, reason = %f.reason, "fetch failed");
            self.store.append_event(&StoreEvent::FetchFailed {
                check_id: spec.check_id.clone(),
                wave_id: spec.wave_id.clone(),
                repetition: spec.repetition,
                vantage: f.vantage.clone(),
                profile: f.profile.clone(),
                reason: f.reason.clone(),
            })?;
        }
        let results = results
            .into_iter()
            .map(|mut r| {
                r.page = None;
                r
            })
            .collect();
        Ok(WaveOutcome {
            results,
            observations,
            failures,
        })
    }
}

/// Flags for price components the page does not state as included.
pub fn disclosure_flags(page: &str) -> BTreeSet<GateFlag> {
    let text = page.to_lowercase();
    let mut flags = BTreeSet::new();
    let tax = ["incl. vat", "including vat", "inkl. mwst", "tax included", "incl. tax", "sis. alv"];
    let shipping = ["free shipping", "shipping included", "incl. shipping", "free delivery", "versandkostenfrei"];
    if !tax.iter().any(|t| text.contains(t)) {
        flags.insert(GateFlag::TaxIncludedUnknown);
    }
    if !shipping.iter().any(|t| text.contains(t)) {
        flags.insert(GateFlag::ShippingIncludedUnknown);
    }
    flags
}
