//! HTTP endpoints for a simulated retailer fleet.

use std::collections::{HashSet, VecDeque};
use std::net::{IpAddr, SocketAddr};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use axum::extract::{ConnectInfo, Path, Query, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::{Html, IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use parking_lot::Mutex;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use tokio::task::JoinHandle;

use super::page::{listing_page, product_page};
use super::policy::{price_for_arm, AbArm, ArmTable, PricingPolicy, RequestProfile, SimRates};
use super::SimError;
use crate::extract::CurrencyConfig;

pub const REGION_HEADER: &str = "x-sim-region";
pub const SESSION_COOKIE: &str = "sim_session";
const LOG_CAP: usize = 10_000;

/// A request as the simulated shop saw it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RequestRecord {
    pub path: String,
    pub region: Option<String>,
    pub headers: Vec<(String, String)>,
}

struct SimState {
    policy: PricingPolicy,
    rates: SimRates,
    config: CurrencyConfig,
    arms: Mutex<ArmTable>,
    sessions: AtomicU64,
    log: Mutex<VecDeque<RequestRecord>>,
}

impl SimState {
    fn arm(&self, session: &str) -> AbArm {
        *self.arms.lock().entry(session.to_string()).or_insert_with(|| {
            let mut rng = ChaCha8Rng::seed_from_u64(self.policy.seed ^ fnv1a(session.as_bytes()));
            AbArm::draw(&self.policy.ab_noise, &mut rng)
        })
    }

    fn record(&self, path: String, region: Option<String>, headers: &HeaderMap) {
        let headers = headers
            .iter()
            .map(|(k, v)| (k.as_str().to_string(), String::from_utf8_lossy(v.as_bytes()).into_owned()))
            .collect();
        let mut log = self.log.lock();
        if log.len() == LOG_CAP {
            log.pop_front();
        }
        log.push_back(RequestRecord { path, region, headers });
    }
}

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes
        .iter()
        .fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ *b as u64).wrapping_mul(0x100_0000_01b3))
}

fn router(state: Arc<SimState>) -> Router {
    Router::new()
        .route("/p/{id}", get(product))
        .route("/list", get(listing))
        .route("/_sim/requests", get(requests))
        .with_state(state)
}

async fn product(
    State(st): State<Arc<SimState>>,
    ConnectInfo(peer): ConnectInfo<SocketAddr>,
    Path(id): Path<String>,
    headers: HeaderMap,
) -> Response {
    let header_str = |name: &str| headers.get(name).and_then(|v| v.to_str().ok());
    let region = st.policy.resolve_region(header_str(REGION_HEADER), Some(peer.ip()));
    st.record(format!("/p/{id}"), region.clone(), &headers);
    let Some(region) = region else {
        return (StatusCode::BAD_REQUEST, "cannot resolve region").into_response();
    };

    let mut request = RequestProfile::default();
    for (k, v) in headers.iter() {
        if let Ok(v) = v.to_str() {
            if k == header::COOKIE {
                request.cookies.extend(RequestProfile::parse_cookies(v));
            } else {
                request.headers.push((k.as_str().to_string(), v.to_string()));
            }
        }
    }
    let existing = request
        .cookies
        .iter()
        .find(|(k, _)| k == SESSION_COOKIE)
        .map(|(_, v)| v.clone());
    let session = existing
        .clone()
        .unwrap_or_else(|| format!("{:016x}", fnv1a(&st.sessions.fetch_add(1, Ordering::Relaxed).to_le_bytes())));
    let arm = st.arm(&session);

    let price = match price_for_arm(&st.policy, &st.rates, &id, &region, &request, arm) {
        Ok(p) => p,
        Err(SimError::UnknownProduct(_)) => return (StatusCode::NOT_FOUND, "no such product").into_response(),
        Err(e) => return (StatusCode::BAD_REQUEST, e.to_string()).into_response(),
    };
    let item = st.policy.item(&id).expect("priced item exists");
    let locale = &st.policy.region_rules[&region].locale;
    let body = product_page(&st.policy, item, &price, locale, &st.config);
    let mut resp = Html(body).into_response();
    if existing.is_none() {
        if let Ok(v) = format!("{SESSION_COOKIE}={session}; Path=/").parse() {
            resp.headers_mut().insert(header::SET_COOKIE, v);
        }
    }
    resp
}

#[derive(Deserialize)]
struct ListingQuery {
    #[serde(default)]
    page: usize,
}

async fn listing(State(st): State<Arc<SimState>>, Query(q): Query<ListingQuery>, headers: HeaderMap) -> Html<String> {
    st.record(format!("/list?page={}", q.page), None, &headers);
    Html(listing_page(&st.policy, q.page))
}

async fn requests(State(st): State<Arc<SimState>>) -> Json<Vec<RequestRecord>> {
    Json(st.log.lock().iter().cloned().collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BindSpec {
    pub host: IpAddr,
    /// First port; retailer `i` listens on `base_port + i`. Zero picks free ports.
    pub base_port: u16,
}

impl Default for BindSpec {
    fn default() -> Self {
        BindSpec {
            host: IpAddr::from([127, 0, 0, 1]),
            base_port: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Endpoint {
    pub domain: String,
    pub addr: SocketAddr,
}

/// Running fleet; endpoints stop when this is dropped.
pub struct Fleet {
    endpoints: Vec<Endpoint>,
    states: Vec<Arc<SimState>>,
    tasks: Vec<JoinHandle<()>>,
}

impl Fleet {
    pub fn endpoints(&self) -> &[Endpoint] {
        &self.endpoints
    }

    fn index(&self, domain: &str) -> Option<usize> {
        self.endpoints.iter().position(|e| e.domain == domain)
    }

    /// Host overrides agents need to reach the fleet by domain name.
    pub fn resolve_overrides(&self) -> Vec<(String, SocketAddr)> {
        self.endpoints.iter().map(|e| (e.domain.clone(), e.addr)).collect()
    }

    /// `http://domain:port`, the URL form agents use with the overrides.
    pub fn base_url(&self, domain: &str) -> Option<String> {
        let e = &self.endpoints[self.index(domain)?];
        Some(format!("http://{}:{}", e.domain, e.addr.port()))
    }

    pub fn product_uri(&self, domain: &str, id: &str) -> Option<String> {
        Some(format!("{}/p/{id}", self.base_url(domain)?))
    }

    pub fn policy(&self, domain: &str) -> Option<&PricingPolicy> {
        Some(&self.states[self.index(domain)?].policy)
    }

    /// Requests seen by `domain`, oldest first (bounded log).
    pub fn requests(&self, domain: &str) -> Vec<RequestRecord> {
        self.index(domain)
            .map(|i| self.states[i].log.lock().iter().cloned().collect())
            .unwrap_or_default()
    }

    pub fn shutdown(self) {}
}

impl Drop for Fleet {
    fn drop(&mut self) {
        for t in &self.tasks {
            t.abort();
        }
    }
}

/// Serves every policy on its own port.
pub async fn serve_fleet(policies: Vec<PricingPolicy>, rates: SimRates, bind: BindSpec) -> Result<Fleet, SimError> {
    let mut seen = HashSet::new();
    for p in &policies {
        p.validate()?;
        if !seen.insert(p.domain.clone()) {
            return Err(SimError::InvalidPolicy(format!("duplicate domain {}", p.domain)));
        }
    }
    let config = CurrencyConfig::default();
    let mut fleet = Fleet {
        endpoints: Vec::new(),
        states: Vec::new(),
        tasks: Vec::new(),
    };
    for (i, policy) in policies.into_iter().enumerate() {
        let port = if bind.base_port == 0 {
            0
        } else {
            u16::try_from(bind.base_port as usize + i).map_err(|_| SimError::Bind(format!("port overflow at {i}")))?
        };
        let listener = tokio::net::TcpListener::bind((bind.host, port))
            .await
            .map_err(|e| SimError::Bind(format!("{}:{port}: {e}", bind.host)))?;
        let addr = listener.local_addr().map_err(|e| SimError::Bind(e.to_string()))?;
        let state = Arc::new(SimState {
            policy,
            rates: rates.clone(),
            config: config.clone(),
            arms: Mutex::new(ArmTable::new()),
            sessions: AtomicU64::new(0),
            log: Mutex::new(VecDeque::new()),
        });
        let app = router(state.clone()).into_make_service_with_connect_info::<SocketAddr>();
        fleet.tasks.push(tokio::spawn(async move {
            if let Err(e) = axum::serve(listener, app).await {
                tracing::error!(error = %e, "simulator endpoint stopped");
            }
        }));
        fleet.endpoints.push(Endpoint {
            domain: state.policy.domain.clone(),
            addr,
        });
        fleet.states.push(state);
    }
    Ok(fleet)
}
