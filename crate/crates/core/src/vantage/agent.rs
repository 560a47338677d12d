//! Vantage-point agent: registers with a coordinator and runs barrier fetches.

use std::collections::HashMap;
use std::net::SocketAddr;
use std::sync::{Arc, LazyLock};
use std::time::{Duration, Instant};

use chrono::Utc;
use futures::{SinkExt, StreamExt};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use reqwest::header::{HeaderMap, HeaderName, HeaderValue, COOKIE};
use tokio::net::TcpStream;
use tokio::sync::{mpsc, oneshot};

use super::protocol::{self, Message};
use super::{FetchResult, FetchStatus, PersonaProfile, VantageError};
use crate::extract::{apply_selector, ExtractError, PriceSelector};

/// How an agent issues HTTP requests.
#[derive(Debug, Clone)]
pub struct FetchConfig {
    pub timeout: Duration,
    /// Host-to-address overrides, for simulated fleets on loopback.
    pub resolve: Vec<(String, SocketAddr)>,
    /// Added after the profile's headers unless the profile sets them.
    pub extra_headers: Vec<(String, String)>,
}

impl Default for FetchConfig {
    fn default() -> Self {
        FetchConfig {
            timeout: Duration::from_secs(20),
            resolve: Vec::new(),
            extra_headers: Vec::new(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct AgentConfig {
    pub id: String,
    pub country: String,
    pub city: String,
    pub coordinator: String,
    pub fetch: FetchConfig,
    /// Offset added to the agent's reported clock.
    pub clock_skew: chrono::Duration,
    /// Upper bound of a random delay before READY and before each fetch.
    pub jitter: Duration,
    pub seed: u64,
    /// Keep reconnecting after the coordinator goes away.
    pub reconnect: bool,
}

impl AgentConfig {
    pub fn new(id: &str, country: &str, city: &str, coordinator: &str) -> Self {
        AgentConfig {
            id: id.to_string(),
            country: country.to_string(),
            city: city.to_string(),
            coordinator: coordinator.to_string(),
            fetch: FetchConfig::default(),
            clock_skew: chrono::Duration::zero(),
            jitter: Duration::ZERO,
            seed: 0,
            reconnect: true,
        }
    }
}

/// One fetch with no state carried over: a fresh client, connection and
/// cookie jar per call. Profile headers and cookies are sent verbatim.
pub async fn agent_fetch(
    cfg: &FetchConfig,
    vantage: &str,
    uri: &str,
    selector: &PriceSelector,
    profile: Option<&PersonaProfile>,
    clock_skew: chrono::Duration,
) -> FetchResult {
    let profile_name = profile.map(|p| p.name.clone());
    let started_at = Utc::now() + clock_skew;
    let t0 = Instant::now();
    let mut result = FetchResult {
        vantage: vantage.to_string(),
        profile: profile_name,
        status: FetchStatus::Timeout,
        page: None,
        started_at: Some(started_at),
        latency_ms: 0,
        detail: None,
    };
    let outcome = fetch_body(cfg, uri, profile).await;
    result.latency_ms = t0.elapsed().as_millis() as u64;
    match outcome {
        Ok((200..=299, body)) => {
            match apply_selector(&body, selector) {
                Ok(_) => result.status = FetchStatus::Ok,
                Err(e @ (ExtractError::SelectorMiss(_) | ExtractError::SelectorAmbiguous { .. })) => {
                    result.status = FetchStatus::SelectorMiss;
                    result.detail = Some(e.to_string());
                }
                // Other failures surface during extraction at the coordinator.
                Err(_) => result.status = FetchStatus::Ok,
            }
            result.page = Some(body);
        }
        Ok((code, _)) => {
            result.status = FetchStatus::HttpError { code };
            result.detail = Some(format!("HTTP {code}"));
        }
        Err(e) => result.detail = Some(e),
    }
    result
}

/// GET `uri` with the profile's headers and cookies; status and body, or a
/// transport error description.
pub async fn fetch_body(cfg: &FetchConfig, uri: &str, profile: Option<&PersonaProfile>) -> Result<(u16, String), String> {
    let mut headers = HeaderMap::new();
    let mut push = |name: &str, value: &str| -> Result<(), String> {
        let n = HeaderName::from_bytes(name.as_bytes()).map_err(|e| format!("header {name}: {e}"))?;
        let v = HeaderValue::from_str(value).map_err(|e| format!("header {name}: {e}"))?;
        headers.append(n, v);
        Ok(())
    };
    if let Some(p) = profile {
        for (k, v) in &p.headers {
            push(k, v)?;
        }
        if let Some(c) = p.cookie_header() {
            push(COOKIE.as_str(), &c)?;
        }
    }
    for (k, v) in &cfg.extra_headers {
        let set_by_profile = profile.is_some_and(|p| p.headers.iter().any(|(n, _)| n.eq_ignore_ascii_case(k)));
        if !set_by_profile {
            push(k, v)?;
        }
    }
    let client = shared_client(cfg)?;
    let resp = client.get(uri).headers(headers).send().await.map_err(describe)?;
    let code = resp.status().as_u16();
    let body = resp.text().await.map_err(describe)?;
    Ok((code, body))
}

type ClientKey = (Duration, Vec<(String, SocketAddr)>);

/// One client per (timeout, overrides). Building a client sets up TLS
/// roots, which is too costly to repeat per fetch. Clients keep no cookies
/// and no idle connections, so sharing one leaks nothing between fetches.
fn shared_client(cfg: &FetchConfig) -> Result<reqwest::Client, String> {
    static CLIENTS: LazyLock<parking_lot::Mutex<HashMap<ClientKey, reqwest::Client>>> = LazyLock::new(Default::default);
    let key = (cfg.timeout, cfg.resolve.clone());
    if let Some(c) = CLIENTS.lock().get(&key) {
        return Ok(c.clone());
    }
    let mut builder = reqwest::Client::builder().timeout(cfg.timeout).pool_max_idle_per_host(0);
    for (host, addr) in &cfg.resolve {
        builder = builder.resolve(host, *addr);
    }
    let client = builder.build().map_err(|e| e.to_string())?;
    CLIENTS.lock().insert(key, client.clone());
    Ok(client)
}

fn describe(e: reqwest::Error) -> String {
    if e.is_timeout() {
        "deadline exceeded".to_string()
    } else if e.is_connect() {
        format!("unreachable: {e}")
    } else {
        e.to_string()
    }
}

/// Runs the agent until the connection ends, or forever with `reconnect`.
pub async fn run_agent(cfg: AgentConfig) -> Result<(), VantageError> {
    let mut backoff = Duration::from_millis(200);
    loop {
        let outcome = session(&cfg).await;
        if !cfg.reconnect {
            return outcome;
        }
        if let Err(e) = &outcome {
            tracing::warn!(agent = %cfg.id, error = %e, "coordinator session ended");
        } else {
            backoff = Duration::from_millis(200);
        }
        tokio::time::sleep(backoff).await;
        backoff = (backoff * 2).min(Duration::from_secs(10));
    }
}

type Locks = Arc<parking_lot::Mutex<HashMap<String, Arc<tokio::sync::Mutex<()>>>>>;
type GoWaiters = Arc<parking_lot::Mutex<HashMap<String, oneshot::Sender<u64>>>>;

async fn session(cfg: &AgentConfig) -> Result<(), VantageError> {
    let stream = TcpStream::connect(&cfg.coordinator).await?;
    stream.set_nodelay(true)?;
    let mut conn = protocol::framed(stream);
    protocol::send(
        &mut conn,
        &Message::Register {
            id: cfg.id.clone(),
            country: cfg.country.clone(),
            city: cfg.city.clone(),
        },
    )
    .await?;
    match protocol::recv(&mut conn).await? {
        Some(Message::Welcome { accepted: true, .. }) => {}
        Some(Message::Welcome { reason, .. }) => {
            return Err(VantageError::Protocol(format!(
                "registration refused: {}",
                reason.unwrap_or_default()
            )))
        }
        other => return Err(VantageError::Protocol(format!("expected WELCOME, got {other:?}"))),
    }
    tracing::info!(agent = %cfg.id, coordinator = %cfg.coordinator, "registered");

    let (mut sink, mut stream) = conn.split();
    let (out_tx, mut out_rx) = mpsc::unbounded_channel::<Message>();
    let writer = tokio::spawn(async move {
        while let Some(msg) = out_rx.recv().await {
            let frame = protocol::encode(&msg)?;
            sink.send(frame).await.map_err(|e| VantageError::Protocol(e.to_string()))?;
        }
        Ok::<_, VantageError>(())
    });

    let locks: Locks = Default::default();
    let go_waiters: GoWaiters = Default::default();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let outcome = loop {
        let msg = match stream.next().await {
            None => break Ok(()),
            Some(Err(e)) => break Err(VantageError::Protocol(e.to_string())),
            Some(Ok(frame)) => match protocol::decode(&frame) {
                Ok(m) => m,
                Err(e) => break Err(e),
            },
        };
        match msg {
            Message::Prepare {
                slot,
                uri,
                selector,
                profile,
            } => {
                let (go_tx, go_rx) = oneshot::channel();
                go_waiters.lock().insert(slot.clone(), go_tx);
                let jitter = (random_delay(&mut rng, cfg.jitter), random_delay(&mut rng, cfg.jitter));
                tokio::spawn(run_slot(
                    cfg.clone(),
                    SlotTask {
                        slot,
                        uri,
                        selector,
                        profile,
                    },
                    go_rx,
                    out_tx.clone(),
                    locks.clone(),
                    jitter,
                ));
            }
            Message::Go { slot, start_in_ms, .. } => {
                if let Some(tx) = go_waiters.lock().remove(&slot) {
                    let _ = tx.send(start_in_ms);
                }
            }
            Message::Abort { slot } => {
                go_waiters.lock().remove(&slot);
            }
            other => tracing::debug!(?other, "ignoring unexpected message"),
        }
    };
    go_waiters.lock().clear();
    drop(out_tx);
    writer.abort();
    outcome
}

struct SlotTask {
    slot: String,
    uri: String,
    selector: PriceSelector,
    profile: Option<PersonaProfile>,
}

fn random_delay(rng: &mut ChaCha8Rng, max: Duration) -> Duration {
    if max.is_zero() {
        return Duration::ZERO;
    }
    Duration::from_micros(rng.random_range(0..=max.as_micros() as u64))
}

async fn run_slot(
    cfg: AgentConfig,
    task: SlotTask,
    go: oneshot::Receiver<u64>,
    out: mpsc::UnboundedSender<Message>,
    locks: Locks,
    (ready_delay, start_delay): (Duration, Duration),
) {
    // One fetch at a time per (uri, profile); the guard is held until the
    // result has been queued.
    let key = format!(
        "{}\u{0}{}",
        task.uri,
        task.profile.as_ref().map(PersonaProfile::fingerprint).unwrap_or_default()
    );
    let lock = locks.lock().entry(key).or_default().clone();
    let _guard = lock.lock().await;

    tokio::time::sleep(ready_delay).await;
    if out.send(Message::Ready { slot: task.slot.clone() }).is_err() {
        return;
    }
    let Ok(start_in_ms) = go.await else {
        return;
    };
    tokio::time::sleep(Duration::from_millis(start_in_ms) + start_delay).await;
    let result = agent_fetch(
        &cfg.fetch,
        &cfg.id,
        &task.uri,
        &task.selector,
        task.profile.as_ref(),
        cfg.clock_skew,
    )
    .await;
    let _ = out.send(Message::Result {
        slot: task.slot,
        result,
    });
}
