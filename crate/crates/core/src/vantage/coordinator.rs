//! Agent registry and the PREPARE/READY/GO barrier.

use std::collections::HashMap;
use std::net::SocketAddr;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::time::Duration;

use chrono::Utc;
use futures::{SinkExt, StreamExt};
use parking_lot::{Mutex, RwLock};
use tokio::net::{TcpListener, TcpStream};
use tokio::sync::{mpsc, oneshot, Notify};

use super::protocol::{self, Message};
use super::{FetchResult, PersonaProfile, VantageError, VantagePoint};
use crate::extract::PriceSelector;

#[derive(Debug, Clone)]
pub struct CoordinatorConfig {
    /// Budget for collecting READY, and the bound on start-time spread.
    pub sync_window: Duration,
    /// Delay between GO and the agreed start.
    pub go_lead: Duration,
    /// Agent fetch deadline; results are awaited this long plus `result_grace`.
    pub fetch_timeout: Duration,
    pub result_grace: Duration,
}

impl Default for CoordinatorConfig {
    fn default() -> Self {
        CoordinatorConfig {
            sync_window: Duration::from_secs(5),
            go_lead: Duration::from_millis(250),
            fetch_timeout: Duration::from_secs(20),
            result_grace: Duration::from_secs(5),
        }
    }
}

/// One fetch to run in a barrier round.
#[derive(Debug, Clone, PartialEq)]
pub struct FetchSlot {
    pub vantage: String,
    pub profile: Option<PersonaProfile>,
}

impl FetchSlot {
    pub fn plain(vantage: &str) -> Self {
        FetchSlot {
            vantage: vantage.to_string(),
            profile: None,
        }
    }
}

#[derive(Default)]
struct Waiters {
    ready: Option<oneshot::Sender<()>>,
    result: Option<oneshot::Sender<FetchResult>>,
}

struct AgentLink {
    info: VantagePoint,
    generation: u64,
    tx: mpsc::UnboundedSender<Message>,
    pending: Arc<Mutex<HashMap<String, Waiters>>>,
}

#[derive(Default)]
struct Registry {
    agents: RwLock<HashMap<String, AgentLink>>,
    changed: Notify,
    generation: AtomicU64,
}

/// Cheap to clone; clones share the registry.
#[derive(Clone)]
pub struct Coordinator {
    registry: Arc<Registry>,
    config: CoordinatorConfig,
}

impl Coordinator {
    pub fn new(config: CoordinatorConfig) -> Self {
        Coordinator {
            registry: Default::default(),
            config,
        }
    }

    pub fn config(&self) -> &CoordinatorConfig {
        &self.config
    }

    /// Accepts agent connections on `addr` in the background; returns the bound address.
    pub async fn listen(&self, addr: &str) -> Result<SocketAddr, VantageError> {
        let listener = TcpListener::bind(addr).await?;
        let local = listener.local_addr()?;
        let registry = self.registry.clone();
        tokio::spawn(async move {
            loop {
                match listener.accept().await {
                    Ok((stream, peer)) => {
                        tokio::spawn(serve_agent(registry.clone(), stream, peer));
                    }
                    Err(e) => {
                        tracing::warn!(error = %e, "accept failed");
                        tokio::time::sleep(Duration::from_millis(50)).await;
                    }
                }
            }
        });
        Ok(local)
    }

    /// Registered agents, sorted by id.
    pub fn vantages(&self) -> Vec<VantagePoint> {
        let mut v: Vec<_> = self.registry.agents.read().values().map(|l| l.info.clone()).collect();
        v.sort_by(|a, b| a.id.cmp(&b.id));
        v
    }

    pub fn vantage_ids(&self) -> Vec<String> {
        self.vantages().into_iter().map(|v| v.id).collect()
    }

    /// Waits until at least `n` agents are registered.
    pub async fn wait_for_agents(&self, n: usize, timeout: Duration) -> bool {
        let deadline = tokio::time::Instant::now() + timeout;
        loop {
            let notified = self.registry.changed.notified();
            if self.registry.agents.read().len() >= n {
                return true;
            }
            if tokio::time::timeout_at(deadline, notified).await.is_err() {
                return self.registry.agents.read().len() >= n;
            }
        }
    }

    /// Barrier fetch of `uri` at every vantage in `vantages`.
    pub async fn fan_out(
        &self,
        check_id: &str,
        vantages: &[String],
        uri: &str,
        selector: &PriceSelector,
        profile: Option<&PersonaProfile>,
    ) -> Result<Vec<FetchResult>, VantageError> {
        let slots: Vec<FetchSlot> = vantages
            .iter()
            .map(|v| FetchSlot {
                vantage: v.clone(),
                profile: profile.cloned(),
            })
            .collect();
        self.fan_out_slots(check_id, &slots, uri, selector, self.config.sync_window).await
    }

    /// Barrier fetch over arbitrary (vantage, profile) slots.
    ///
    /// Every slot gets PREPARE; those answering READY within `sync_window`
    /// receive GO together and start after `go_lead`; the rest are recorded
    /// as timeouts. One result per slot, in slot order.
    pub async fn fan_out_slots(
        &self,
        check_id: &str,
        slots: &[FetchSlot],
        uri: &str,
        selector: &PriceSelector,
        sync_window: Duration,
    ) -> Result<Vec<FetchResult>, VantageError> {
        if slots.len() < 2 {
            return Err(VantageError::NotEnoughVantages(slots.len()));
        }
        struct Armed {
            slot_id: String,
            tx: mpsc::UnboundedSender<Message>,
            ready: oneshot::Receiver<()>,
            result: oneshot::Receiver<FetchResult>,
        }
        let mut armed = Vec::with_capacity(slots.len());
        {
            let agents = self.registry.agents.read();
            for s in slots {
                if !agents.contains_key(&s.vantage) {
                    return Err(VantageError::UnknownAgent(s.vantage.clone()));
                }
            }
            for (i, s) in slots.iter().enumerate() {
                let link = &agents[&s.vantage];
                let slot_id = format!("{check_id}#{i}");
                let (ready_tx, ready_rx) = oneshot::channel();
                let (result_tx, result_rx) = oneshot::channel();
                link.pending.lock().insert(
                    slot_id.clone(),
                    Waiters {
                        ready: Some(ready_tx),
                        result: Some(result_tx),
                    },
                );
                let _ = link.tx.send(Message::Prepare {
                    slot: slot_id.clone(),
                    uri: uri.to_string(),
                    selector: selector.clone(),
                    profile: s.profile.clone(),
                });
                armed.push(Armed {
                    slot_id,
                    tx: link.tx.clone(),
                    ready: ready_rx,
                    result: result_rx,
                });
            }
        }

        let deadline = tokio::time::Instant::now() + sync_window;
        let ready: Vec<bool> = futures::future::join_all(
            armed
                .iter_mut()
                .map(|a| async { matches!(tokio::time::timeout_at(deadline, &mut a.ready).await, Ok(Ok(()))) }),
        )
        .await;

        let lead = self.config.go_lead;
        let start_at = Utc::now() + chrono::Duration::from_std(lead).unwrap_or_default();
        for (a, ok) in armed.iter().zip(&ready) {
            let msg = if *ok {
                Message::Go {
                    slot: a.slot_id.clone(),
                    start_at,
                    start_in_ms: lead.as_millis() as u64,
                }
            } else {
                Message::Abort { slot: a.slot_id.clone() }
            };
            let _ = a.tx.send(msg);
        }

        let result_deadline = tokio::time::Instant::now() + lead + self.config.fetch_timeout + self.config.result_grace;
        let results: Vec<FetchResult> = futures::future::join_all(armed.into_iter().zip(slots).zip(ready).map(
            |((a, s), ok)| async move {
                let profile = s.profile.as_ref().map(|p| p.name.clone());
                if !ok {
                    return FetchResult::timeout(&s.vantage, profile, "no READY within the sync window");
                }
                match tokio::time::timeout_at(result_deadline, a.result).await {
                    Ok(Ok(mut r)) => {
                        r.vantage = s.vantage.clone();
                        r.profile = profile;
                        r
                    }
                    Ok(Err(_)) => FetchResult::timeout(&s.vantage, profile, "agent disconnected"),
                    Err(_) => FetchResult::timeout(&s.vantage, profile, "no RESULT before the deadline"),
                }
            },
        ))
        .await;
        self.forget(check_id, slots);

        let ok = results.iter().filter(|r| r.is_ok()).count();
        if ok < 2 {
            return Err(VantageError::QuorumFailure { ok, results });
        }
        Ok(results)
    }

    fn forget(&self, check_id: &str, slots: &[FetchSlot]) {
        let agents = self.registry.agents.read();
        for (i, s) in slots.iter().enumerate() {
            if let Some(link) = agents.get(&s.vantage) {
                link.pending.lock().remove(&format!("{check_id}#{i}"));
            }
        }
    }
}

async fn serve_agent(registry: Arc<Registry>, stream: TcpStream, peer: SocketAddr) {
    let _ = stream.set_nodelay(true);
    let mut conn = protocol::framed(stream);
    let (id, country, city) = match protocol::recv(&mut conn).await {
        Ok(Some(Message::Register { id, country, city })) => (id, country, city),
        other => {
            tracing::warn!(%peer, ?other, "expected REGISTER");
            return;
        }
    };
    if id.trim().is_empty() {
        let _ = protocol::send(
            &mut conn,
            &Message::Welcome {
                accepted: false,
                reason: Some("empty agent id".into()),
            },
        )
        .await;
        return;
    }
    if protocol::send(&mut conn, &Message::Welcome { accepted: true, reason: None })
        .await
        .is_err()
    {
        return;
    }

    let (mut sink, mut stream) = conn.split();
    let (tx, mut rx) = mpsc::unbounded_channel::<Message>();
    let pending: Arc<Mutex<HashMap<String, Waiters>>> = Default::default();
    let generation = registry.generation.fetch_add(1, Ordering::Relaxed);
    {
        let link = AgentLink {
            info: VantagePoint {
                id: id.clone(),
                country,
                city,
                endpoint: peer.to_string(),
            },
            generation,
            tx,
            pending: pending.clone(),
        };
        // A reconnecting agent replaces its stale link; ids stay unique.
        registry.agents.write().insert(id.clone(), link);
    }
    registry.changed.notify_waiters();
    tracing::info!(agent = %id, %peer, "agent registered");

    let writer = tokio::spawn(async move {
        while let Some(msg) = rx.recv().await {
            let Ok(frame) = protocol::encode(&msg) else { continue };
            if sink.send(frame).await.is_err() {
                break;
            }
        }
    });

    while let Some(frame) = stream.next().await {
        let Ok(frame) = frame else { break };
        match protocol::decode(&frame) {
            Ok(Message::Ready { slot }) => {
                if let Some(w) = pending.lock().get_mut(&slot) {
                    if let Some(tx) = w.ready.take() {
                        let _ = tx.send(());
                    }
                }
            }
            Ok(Message::Result { slot, result }) => {
                if let Some(mut w) = pending.lock().remove(&slot) {
                    if let Some(tx) = w.result.take() {
                        let _ = tx.send(result);
                    }
                }
            }
            Ok(other) => tracing::debug!(agent = %id, ?other, "unexpected message"),
            Err(e) => tracing::warn!(agent = %id, error = %e, "undecodable frame"),
        }
    }

    {
        let mut agents = registry.agents.write();
        if agents.get(&id).is_some_and(|l| l.generation == generation) {
            agents.remove(&id);
        }
    }
    pending.lock().clear();
    writer.abort();
    registry.changed.notify_waiters();
    tracing::info!(agent = %id, "agent disconnected");
}
