//! In-process deployment: a simulated fleet, a coordinator and one agent per
//! simulated vantage, all on loopback. Used by the test suites and `sim demo`.

use std::path::Path;
use std::sync::Arc;
use std::time::Duration;

use chrono::{Days, Utc};
use tokio::task::JoinHandle;

use tokio::sync::mpsc::UnboundedSender;

use crate::crawl::{run_plans, CatalogEntry, CrawlConfig, CrawlError, CrawlPlan, CrawlProgress, WaveReport};
use crate::extract::PriceParser;
use crate::fx::RateHandle;
use crate::sim::{
    default_regions, generate_fleet, serve_fleet, BindSpec, Fleet, FleetSpec, PricingPolicy, SimRates, REGION_HEADER,
};
use crate::vantage::{
    run_agent, AgentConfig, Coordinator, CoordinatorConfig, ObservationStore, Pipeline, VantageError,
};

/// One simulated agent.
#[derive(Debug, Clone)]
pub struct AgentSpec {
    pub id: String,
    /// Simulator region announced via the test header.
    pub region: String,
    pub country: String,
    pub city: String,
    pub clock_skew: chrono::Duration,
    pub jitter: Duration,
}

impl AgentSpec {
    pub fn new(id: &str, region: &str, city: &str) -> Self {
        AgentSpec {
            id: id.to_string(),
            region: region.to_string(),
            country: region.to_string(),
            city: city.to_string(),
            clock_skew: chrono::Duration::zero(),
            jitter: Duration::ZERO,
        }
    }
}

/// One agent per region, named `<region>-<n>`.
pub fn agents_for_regions(regions: &[&str]) -> Vec<AgentSpec> {
    regions
        .iter()
        .enumerate()
        .map(|(i, r)| AgentSpec::new(&format!("{}-{i}", r.to_ascii_lowercase()), r, &format!("city-{i}")))
        .collect()
}

pub struct Testbed {
    pub fleet: Fleet,
    pub coordinator: Coordinator,
    pub coordinator_addr: std::net::SocketAddr,
    pub pipeline: Pipeline,
    pub rates: RateHandle,
    pub sim_rates: SimRates,
    agents: Vec<JoinHandle<()>>,
}

impl Testbed {
    /// Starts everything and waits until all agents registered.
    pub async fn start(
        policies: Vec<PricingPolicy>,
        agents: &[AgentSpec],
        store_dir: &Path,
        config: CoordinatorConfig,
    ) -> Result<Testbed, VantageError> {
        let sim_rates = SimRates::default();
        let fleet = serve_fleet(policies, sim_rates.clone(), BindSpec::default())
            .await
            .map_err(|e| VantageError::Protocol(e.to_string()))?;
        let coordinator = Coordinator::new(config);
        let coordinator_addr = coordinator.listen("127.0.0.1:0").await?;
        let store = Arc::new(ObservationStore::open(store_dir)?);
        let today = Utc::now().date_naive();
        let rates = RateHandle::new(sim_rates.table(today - Days::new(2), today + Days::new(30)));
        let pipeline = Pipeline::new(coordinator.clone(), store, PriceParser::default());
        let mut bed = Testbed {
            fleet,
            coordinator,
            coordinator_addr,
            pipeline,
            rates,
            sim_rates,
            agents: Vec::new(),
        };
        for a in agents {
            bed.spawn_agent(a);
        }
        if !bed.coordinator.wait_for_agents(agents.len(), Duration::from_secs(10)).await {
            return Err(VantageError::Protocol("agents did not register in time".into()));
        }
        Ok(bed)
    }

    pub fn agent_config(&self, spec: &AgentSpec) -> AgentConfig {
        let mut cfg = AgentConfig::new(&spec.id, &spec.country, &spec.city, &self.coordinator_addr.to_string());
        cfg.fetch.resolve = self.fleet.resolve_overrides();
        cfg.fetch.extra_headers = vec![(REGION_HEADER.to_string(), spec.region.clone())];
        cfg.fetch.timeout = self.coordinator.config().fetch_timeout;
        cfg.clock_skew = spec.clock_skew;
        cfg.jitter = spec.jitter;
        cfg.seed = self.agents.len() as u64 + 1;
        cfg
    }

    pub fn spawn_agent(&mut self, spec: &AgentSpec) {
        let cfg = self.agent_config(spec);
        self.agents.push(tokio::spawn(async move {
            let _ = run_agent(cfg).await;
        }));
    }

    pub fn store(&self) -> &Arc<ObservationStore> {
        &self.pipeline.store
    }
}

impl Drop for Testbed {
    fn drop(&mut self) {
        for a in &self.agents {
            a.abort();
        }
    }
}

/// A full simulated crawl: fleet, one agent per entry of `regions`, one plan per retailer.
#[derive(Debug, Clone)]
pub struct SimCrawlSpec {
    pub fleet: FleetSpec,
    pub regions: Vec<String>,
    pub cap: usize,
    pub waves: u32,
    pub period: Duration,
    pub seed: u64,
    pub crawl: CrawlConfig,
    pub coordinator: CoordinatorConfig,
}

impl Default for SimCrawlSpec {
    fn default() -> Self {
        SimCrawlSpec {
            fleet: FleetSpec::default(),
            regions: default_regions().into_iter().take(6).map(|r| r.name).collect(),
            cap: 100,
            waves: 7,
            period: Duration::from_secs(2),
            seed: 2013,
            crawl: CrawlConfig {
                politeness: Duration::ZERO,
                ..CrawlConfig::default()
            },
            coordinator: CoordinatorConfig {
                go_lead: Duration::from_millis(20),
                fetch_timeout: Duration::from_secs(10),
                result_grace: Duration::from_secs(2),
                ..CoordinatorConfig::default()
            },
        }
    }
}

pub struct SimCrawlRun {
    pub bed: Testbed,
    pub policies: Vec<PricingPolicy>,
    pub plans: Vec<CrawlPlan>,
    pub results: Vec<Result<Vec<WaveReport>, CrawlError>>,
}

/// Runs (or resumes, given the same store and spec) a simulated crawl.
/// Plans are derived deterministically from the spec, so a restart gets
/// the same plan ids and product indices.
pub async fn run_sim_crawl(
    spec: &SimCrawlSpec,
    store_dir: &Path,
    progress: Option<UnboundedSender<CrawlProgress>>,
) -> Result<SimCrawlRun, CrawlError> {
    run_policy_crawl(generate_fleet(&spec.fleet), spec, store_dir, progress).await
}

/// [`run_sim_crawl`] over given policies; `spec.fleet` is ignored.
pub async fn run_policy_crawl(
    policies: Vec<PricingPolicy>,
    spec: &SimCrawlSpec,
    store_dir: &Path,
    progress: Option<UnboundedSender<CrawlProgress>>,
) -> Result<SimCrawlRun, CrawlError> {
    let regions: Vec<&str> = spec.regions.iter().map(String::as_str).collect();
    let agents = agents_for_regions(&regions);
    let bed = Testbed::start(policies.clone(), &agents, store_dir, spec.coordinator.clone()).await?;
    let plans = policies
        .iter()
        .map(|p| {
            let catalog: Vec<CatalogEntry> = p
                .catalog
                .iter()
                .filter_map(|item| {
                    Some(CatalogEntry {
                        uri: bed.fleet.product_uri(&p.domain, &item.id)?,
                        selector: p.template.price_selector(),
                    })
                })
                .collect();
            CrawlPlan::new(&p.domain, &catalog, spec.cap, spec.waves, spec.period, spec.seed)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let results = run_plans(&bed.pipeline, &plans, &spec.crawl, &bed.rates, progress).await;
    Ok(SimCrawlRun {
        bed,
        policies,
        plans,
        results,
    })
}
