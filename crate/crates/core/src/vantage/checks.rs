//! Crowd check intake: dedup, rate limiting, repetitions and status.

use std::collections::{HashMap, VecDeque};
use std::sync::Arc;
use std::time::Duration;

use chrono::{DateTime, Utc};
use parking_lot::Mutex;
use serde::{Deserialize, Serialize};

use super::pipeline::{FetchFailure, Pipeline, PriorPrices, WaveSpec};
use super::store::StoreEvent;
use super::{CheckRequest, FetchSlot, VantageError};
use crate::extract::canonical_format;
use crate::fx::{currency_gate, GateVerdict, RateHandle};

#[derive(Debug, Clone)]
pub struct CheckConfig {
    pub repetitions: u32,
    pub repetition_spacing: Duration,
    pub dedup_window: chrono::Duration,
    /// Accepted checks per requester per `rate_window`.
    pub rate_limit: usize,
    pub rate_window: chrono::Duration,
}

impl Default for CheckConfig {
    fn default() -> Self {
        CheckConfig {
            repetitions: 3,
            repetition_spacing: Duration::from_secs(600),
            dedup_window: chrono::Duration::seconds(60),
            rate_limit: 30,
            rate_window: chrono::Duration::seconds(60),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckState {
    Queued,
    Running,
    Done,
    Failed,
}

/// Price reported to the requester for one vantage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VantagePrice {
    pub vantage: String,
    pub country: String,
    pub city: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub price: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckStatus {
    pub check_id: String,
    pub status: CheckState,
    pub prices: Vec<VantagePrice>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gate: Option<GateVerdict>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    /// Repetitions finished so far.
    pub completed_repetitions: u32,
}

#[derive(Default)]
struct Intake {
    dedup: HashMap<(String, String, String), (String, DateTime<Utc>)>,
    recent: HashMap<String, VecDeque<DateTime<Utc>>>,
    status: HashMap<String, CheckStatus>,
}

#[derive(Clone)]
pub struct CheckService {
    pipeline: Pipeline,
    rates: RateHandle,
    config: CheckConfig,
    intake: Arc<Mutex<Intake>>,
}

impl CheckService {
    pub fn new(pipeline: Pipeline, rates: RateHandle, config: CheckConfig) -> Self {
        CheckService {
            pipeline,
            rates,
            config,
            intake: Default::default(),
        }
    }

    pub fn pipeline(&self) -> &Pipeline {
        &self.pipeline
    }

    /// Validates, deduplicates and queues a check; returns its id at once.
    ///
    /// A request repeating (uri, selector, requester) within the dedup window
    /// of an earlier one gets the earlier id and is not re-run.
    pub fn submit_check(&self, req: CheckRequest) -> Result<String, VantageError> {
        req.validate()?;
        let key = (req.product_uri.clone(), req.selector.to_string(), req.requester.clone());
        let now = req.submitted_at;
        let id = {
            let mut intake = self.intake.lock();
            if let Some((id, at)) = intake.dedup.get(&key) {
                if now - *at <= self.config.dedup_window && now >= *at {
                    return Ok(id.clone());
                }
            }
            let recent = intake.recent.entry(req.requester.clone()).or_default();
            while recent.front().is_some_and(|t| now - *t >= self.config.rate_window) {
                recent.pop_front();
            }
            if recent.len() >= self.config.rate_limit {
                return Err(VantageError::RateLimited(req.requester.clone()));
            }
            recent.push_back(now);
            let id = format!("c-{}", uuid::Uuid::new_v4().simple());
            intake.dedup.insert(key, (id.clone(), now));
            intake.status.insert(
                id.clone(),
                CheckStatus {
                    check_id: id.clone(),
                    status: CheckState::Queued,
                    prices: Vec::new(),
                    gate: None,
                    error: None,
                    completed_repetitions: 0,
                },
            );
            id
        };
        self.pipeline.store.append_event(&StoreEvent::CheckAccepted {
            check_id: id.clone(),
            request: CheckRequest {
                profile: req.profile.as_ref().map(|p| p.redacted()),
                ..req.clone()
            },
        })?;
        if let Ok(handle) = tokio::runtime::Handle::try_current() {
            let svc = self.clone();
            let id = id.clone();
            handle.spawn(async move { svc.run_check(&id, req).await });
        }
        Ok(id)
    }

    pub fn status(&self, id: &str) -> Option<CheckStatus> {
        self.intake.lock().status.get(id).cloned()
    }

    fn update(&self, id: &str, f: impl FnOnce(&mut CheckStatus)) {
        if let Some(s) = self.intake.lock().status.get_mut(id) {
            f(s);
        }
    }

    /// Runs all repetitions of an accepted check. The first completed
    /// repetition answers the requester; later ones only add to the store.
    pub async fn run_check(&self, id: &str, req: CheckRequest) {
        self.update(id, |s| s.status = CheckState::Running);
        let mut prior = PriorPrices::new();
        for rep in 0..self.config.repetitions.max(1) {
            if rep > 0 {
                tokio::time::sleep(self.config.repetition_spacing).await;
            }
            let vantages = self.pipeline.coordinator.vantages();
            let spec = WaveSpec {
                check_id: id.to_string(),
                wave_id: id.to_string(),
                repetition: rep,
                uri: req.product_uri.clone(),
                selector: req.selector.clone(),
                slots: vantages
                    .iter()
                    .map(|v| FetchSlot {
                        vantage: v.id.clone(),
                        profile: req.profile.clone(),
                    })
                    .collect(),
            };
            let outcome = self.pipeline.run_wave(&spec, &prior).await;
            let answered = self.status(id).is_some_and(|s| s.status == CheckState::Done);
            match outcome {
                Ok(out) => {
                    for o in &out.observations {
                        prior.entry((o.vantage.clone(), o.profile.clone())).or_insert(o.money);
                    }
                    if !answered {
                        let gate = currency_gate(&out.observations, &self.rates.current()).ok();
                        let prices = vantage_prices(&vantages, &out.observations, &out.failures);
                        self.update(id, |s| {
                            s.status = CheckState::Done;
                            s.prices = prices;
                            s.gate = gate;
                        });
                    }
                }
                Err(e) => {
                    tracing::warn!(check = %id, repetition = rep, error = %e, "check round failed");
                    if !answered {
                        self.update(id, |s| {
                            s.status = CheckState::Failed;
                            s.error = Some(e.to_string());
                        });
                    }
                }
            }
            self.update(id, |s| s.completed_repetitions = rep + 1);
        }
    }
}

fn vantage_prices(
    vantages: &[super::VantagePoint],
    obs: &[super::PriceObservation],
    failures: &[FetchFailure],
) -> Vec<VantagePrice> {
    vantages
        .iter()
        .map(|v| {
            let price = obs.iter().find(|o| o.vantage == v.id).map(|o| canonical_format(&o.money));
            let failure = match price {
                Some(_) => None,
                None => Some(
                    failures
                        .iter()
                        .find(|f| f.vantage == v.id)
                        .map_or_else(|| "no result".to_string(), |f| f.reason.clone()),
                ),
            };
            VantagePrice {
                vantage: v.id.clone(),
                country: v.country.clone(),
                city: v.city.clone(),
                price,
                failure,
            }
        })
        .collect()
}
