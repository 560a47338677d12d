use std::collections::{BTreeSet, HashMap};
use std::sync::Arc;
use std::time::Duration;

use chrono::{DateTime, Utc};
use futures::stream::{self, StreamExt};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use tokio::sync::{mpsc, Mutex};
use tokio::time::Instant;

use super::{CrawlError, CrawlPlan, WaveReport};
use crate::analytics::product_profile;
use crate::fx::RateHandle;
use crate::vantage::{FetchSlot, Pipeline, PriceObservation, StoreEvent, VantageError, WaveSpec};

#[derive(Debug, Clone)]
pub struct CrawlConfig {
    /// Products fanned out concurrently within one plan.
    pub parallelism: usize,
    /// Minimum spacing between product fan-outs to one retailer.
    pub politeness: Duration,
    /// Consecutive empty waves before a product is dropped.
    pub drop_after: u32,
    /// How long a wave waits for its vantage set before being skipped.
    pub agent_wait: Duration,
}

impl Default for CrawlConfig {
    fn default() -> Self {
        CrawlConfig {
            parallelism: 4,
            politeness: Duration::from_secs(2),
            drop_after: 3,
            agent_wait: Duration::from_secs(30),
        }
    }
}

/// Key identifying a stored observation.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ObservationKey {
    pub check_id: String,
    pub repetition: u32,
    pub vantage: String,
    pub profile: Option<String>,
}

impl From<&PriceObservation> for ObservationKey {
    fn from(o: &PriceObservation) -> Self {
        ObservationKey {
            check_id: o.check_id.clone(),
            repetition: o.repetition,
            vantage: o.vantage.clone(),
            profile: o.profile.clone(),
        }
    }
}

/// Progress notifications, sent after the corresponding store write.
#[derive(Debug, Clone, PartialEq)]
pub enum CrawlProgress {
    WaveStarted { plan_id: String, wave: u32 },
    /// Observations that are durably appended.
    Stored { plan_id: String, wave: u32, keys: Vec<ObservationKey> },
    WaveCompleted { plan_id: String, wave: u32 },
    WaveSkipped { plan_id: String, wave: u32, reason: String },
}

type Progress = Option<mpsc::UnboundedSender<CrawlProgress>>;

fn notify(progress: &Progress, p: CrawlProgress) {
    if let Some(tx) = progress {
        let _ = tx.send(p);
    }
}

#[derive(Default)]
struct PriorRuns {
    started: HashMap<u32, DateTime<Utc>>,
    finished: BTreeSet<u32>,
}

fn prior_runs(events: &[StoreEvent], plan_id: &str) -> PriorRuns {
    let mut out = PriorRuns::default();
    for e in events {
        match e {
            StoreEvent::WaveStarted { plan_id: p, wave, at } if p == plan_id => {
                out.started.entry(*wave).or_insert(*at);
            }
            StoreEvent::WaveCompleted { plan_id: p, wave, .. } | StoreEvent::WaveSkipped { plan_id: p, wave, .. }
                if p == plan_id =>
            {
                out.finished.insert(*wave);
            }
            _ => {}
        }
    }
    out
}

fn skip(pipeline: &Pipeline, progress: &Progress, plan: &CrawlPlan, wave: u32, reason: String) -> Result<(), CrawlError> {
    tracing::warn!(plan = %plan.plan_id, wave, %reason, "wave skipped");
    pipeline.store.append_event(&StoreEvent::WaveSkipped {
        plan_id: plan.plan_id.clone(),
        wave,
        reason: reason.clone(),
    })?;
    notify(
        progress,
        CrawlProgress::WaveSkipped {
            plan_id: plan.plan_id.clone(),
            wave,
            reason,
        },
    );
    Ok(())
}

async fn sleep_until(at: DateTime<Utc>) {
    if let Ok(d) = (at - Utc::now()).to_std() {
        tokio::time::sleep(d).await;
    }
}

/// Vantage set for a wave, waiting up to `wait` for it to register.
async fn vantage_set(pipeline: &Pipeline, plan: &CrawlPlan, wait: Duration) -> Result<Vec<String>, String> {
    let deadline = Instant::now() + wait;
    loop {
        let registered = pipeline.coordinator.vantage_ids();
        if plan.vantages.is_empty() {
            if registered.len() >= 2 {
                return Ok(registered);
            }
        } else {
            let missing: Vec<&String> = plan.vantages.iter().filter(|v| !registered.contains(v)).collect();
            if missing.is_empty() {
                return Ok(plan.vantages.clone());
            }
            if Instant::now() >= deadline {
                return Err(format!("agent set unavailable: missing {missing:?}"));
            }
        }
        if Instant::now() >= deadline {
            return Err(format!("agent set unavailable: {} registered", registered.len()));
        }
        tokio::time::sleep(Duration::from_millis(50)).await;
    }
}

/// Runs the plan's waves in order, resuming after earlier runs recorded in
/// the store. Waves already finished are left alone; a wave that started
/// but never completed, and any wave whose whole slot has passed, is
/// recorded as skipped rather than back-filled. Returns the reports of the
/// waves executed by this call.
pub async fn schedule_waves(
    pipeline: &Pipeline,
    plan: &CrawlPlan,
    config: &CrawlConfig,
    rates: &RateHandle,
    progress: Progress,
) -> Result<Vec<WaveReport>, CrawlError> {
    plan.validate()?;
    let resumed_at = Utc::now();
    let prior = prior_runs(&pipeline.store.events()?, &plan.plan_id);
    let origin = plan
        .start_at
        .or_else(|| prior.started.get(&0).copied())
        .or_else(|| prior.started.values().min().copied())
        .unwrap_or(resumed_at);
    let period = chrono::Duration::from_std(plan.wave_period).map_err(|e| CrawlError::InvalidPlan(e.to_string()))?;
    let mut reports = Vec::new();
    let mut empty_streak: HashMap<usize, u32> = HashMap::new();
    let mut dropped: BTreeSet<usize> = BTreeSet::new();
    let mut prev_start: Option<DateTime<Utc>> = None;

    for wave in 0..plan.wave_count {
        if prior.finished.contains(&wave) {
            continue;
        }
        if prior.started.contains_key(&wave) {
            skip(pipeline, &progress, plan, wave, "interrupted".into())?;
            continue;
        }
        let slot = origin + period * wave as i32;
        // Slots that ended before this call began fell into downtime; waves
        // that merely run late behind their predecessors still execute.
        if slot + period < resumed_at {
            skip(pipeline, &progress, plan, wave, "missed: coordinator was down for the whole slot".into())?;
            continue;
        }
        let mut begin = slot.max(Utc::now());
        if let Some(p) = prev_start {
            begin = begin.max(p + period);
        }
        sleep_until(begin).await;
        let vantages = match vantage_set(pipeline, plan, config.agent_wait).await {
            Ok(v) => v,
            Err(reason) => {
                skip(pipeline, &progress, plan, wave, reason)?;
                continue;
            }
        };
        let started_at = Utc::now();
        prev_start = Some(started_at);
        pipeline.store.append_event(&StoreEvent::WaveStarted {
            plan_id: plan.plan_id.clone(),
            wave,
            at: started_at,
        })?;
        notify(
            &progress,
            CrawlProgress::WaveStarted {
                plan_id: plan.plan_id.clone(),
                wave,
            },
        );

        let mut order: Vec<usize> = (0..plan.products.len()).filter(|i| !dropped.contains(i)).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(plan.seed ^ (wave as u64).wrapping_mul(0x9e37_79b9)));
        let gate = Arc::new(Mutex::new(Instant::now()));
        let slots: Vec<FetchSlot> = vantages.iter().map(|v| FetchSlot::plain(v)).collect();
        let results: Vec<(usize, Result<Vec<PriceObservation>, (usize, usize)>, usize)> = stream::iter(order)
            .map(|idx| {
                let gate = gate.clone();
                let spec = WaveSpec {
                    check_id: plan.check_id(wave, idx),
                    wave_id: plan.wave_id(wave),
                    repetition: 0,
                    uri: plan.products[idx].uri.clone(),
                    selector: plan.products[idx].selector.clone(),
                    slots: slots.clone(),
                };
                let progress = progress.clone();
                async move {
                    {
                        let mut next = gate.lock().await;
                        tokio::time::sleep_until(*next).await;
                        *next = Instant::now() + config.politeness;
                    }
                    match pipeline.run_wave(&spec, &Default::default()).await {
                        Ok(out) => {
                            notify(
                                &progress,
                                CrawlProgress::Stored {
                                    plan_id: plan.plan_id.clone(),
                                    wave,
                                    keys: out.observations.iter().map(ObservationKey::from).collect(),
                                },
                            );
                            (idx, Ok(out.observations), out.failures.len())
                        }
                        Err(VantageError::QuorumFailure { ok, results }) => {
                            (idx, Err((ok, results.len())), results.len() - ok)
                        }
                        Err(e) => {
                            tracing::warn!(check = %spec.check_id, error = %e, "product fan-out failed");
                            (idx, Err((0, spec.slots.len())), spec.slots.len())
                        }
                    }
                }
            })
            .buffer_unordered(config.parallelism.max(1))
            .collect()
            .await;

        let table = rates.current();
        let mut report = WaveReport {
            plan_id: plan.plan_id.clone(),
            wave,
            started_at,
            completed_at: started_at,
            profiles: Vec::new(),
            failures: 0,
            observations: 0,
            empty_products: Vec::new(),
            dropped: Vec::new(),
        };
        let mut results = results;
        results.sort_by_key(|r| r.0);
        for (idx, outcome, failures) in results {
            report.failures += failures;
            let observed = match &outcome {
                Ok(obs) => obs.len(),
                Err((ok, _)) => *ok,
            };
            report.observations += observed;
            if observed == 0 {
                report.empty_products.push(plan.products[idx].uri.clone());
                let streak = empty_streak.entry(idx).or_default();
                *streak += 1;
                if *streak >= config.drop_after {
                    dropped.insert(idx);
                    report.dropped.push(plan.products[idx].uri.clone());
                }
            } else {
                empty_streak.remove(&idx);
            }
            if let Ok(obs) = outcome {
                match product_profile(&obs, &table) {
                    Ok(p) => report.profiles.push(p),
                    Err(e) => tracing::debug!(uri = %plan.products[idx].uri, error = %e, "not profiled"),
                }
            }
        }
        report.completed_at = Utc::now();
        pipeline.store.append_event(&StoreEvent::WaveCompleted {
            plan_id: plan.plan_id.clone(),
            wave,
            at: report.completed_at,
            observations: report.observations,
            failures: report.failures,
        })?;
        notify(
            &progress,
            CrawlProgress::WaveCompleted {
                plan_id: plan.plan_id.clone(),
                wave,
            },
        );
        reports.push(report);
    }
    Ok(reports)
}

/// Runs several plans concurrently; one result per plan, in input order.
pub async fn run_plans(
    pipeline: &Pipeline,
    plans: &[CrawlPlan],
    config: &CrawlConfig,
    rates: &RateHandle,
    progress: Progress,
) -> Vec<Result<Vec<WaveReport>, CrawlError>> {
    futures::future::join_all(
        plans
            .iter()
            .map(|p| schedule_waves(pipeline, p, config, rates, progress.clone())),
    )
    .await
}
