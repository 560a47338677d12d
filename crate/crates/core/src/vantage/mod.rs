//! Coordinator service and vantage-point agents: synchronized multi-location
//! fetches, extraction and persistence of the resulting observations.

pub mod agent;
pub mod api;
pub mod checks;
pub mod coordinator;
pub mod pipeline;
pub mod protocol;
pub mod store;
mod types;

use thiserror::Error;

pub use agent::{agent_fetch, fetch_body, run_agent, AgentConfig, FetchConfig};
pub use checks::{CheckConfig, CheckService, CheckState, CheckStatus, VantagePrice};
pub use coordinator::{Coordinator, CoordinatorConfig, FetchSlot};
pub use pipeline::{FetchFailure, Pipeline, PriorPrices, WaveOutcome, WaveSpec};
pub use store::{ObservationStore, Replay, ReplayQuery, SnapshotStore, StoreEvent};
pub use types::{
    start_spread, uri_domain, validate_uri, CheckRequest, FetchResult, FetchStatus, GateFlag, PersonaProfile,
    PriceObservation, VantagePoint,
};

#[derive(Debug, Error)]
pub enum VantageError {
    #[error("invalid product URI {0:?}")]
    InvalidUri(String),
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("requester {0} is over the rate limit")]
    RateLimited(String),
    #[error("fan-out needs at least 2 vantage points, got {0}")]
    NotEnoughVantages(usize),
    #[error("agent {0} is not registered")]
    UnknownAgent(String),
    #[error("only {ok} ok results; wave unusable")]
    QuorumFailure { ok: usize, results: Vec<FetchResult> },
    #[error("protocol error: {0}")]
    Protocol(String),
    #[error("store error: {0}")]
    Store(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
