use std::collections::BTreeMap;
use std::io::Write;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;
use std::sync::Arc;
use std::time::Duration;

use anyhow::{anyhow, bail, Context, Result};
use chrono::{NaiveDate, Utc};
use clap::{Args, Parser, Subcommand, ValueEnum};
use regex::Regex;
use rust_decimal::Decimal;
use serde::Serialize;
use tracing_subscriber::EnvFilter;

use pricevar::analytics::{
    band_report, by_domain, default_band_edges, fit_domain, grid_csv, location_ratios, location_ratios_csv,
    pairwise_grid, profiles_from_observations, ratio_points_csv, ratio_vs_price, summarize_all, third_party_scan,
    ProductProfile, Report,
};
use pricevar::crawl::{
    catalog_ingest, fetch_listing, read_catalog, run_plans, write_catalog, CrawlConfig, CrawlPlan, CrawlProgress,
};
use pricevar::extract::{PriceParser, PriceSelector};
use pricevar::fx::{currency_gate_prices, spawn_periodic_ingest, RateHandle, RateIngestClient, RateTable};
use pricevar::sim::{generate_fleet, load_policies, serve_fleet, write_policies, BindSpec, FleetSpec, SimRates};
use pricevar::testbed::{run_sim_crawl, SimCrawlSpec};
use pricevar::vantage::{
    api, run_agent, AgentConfig, CheckConfig, CheckService, Coordinator, CoordinatorConfig, FetchConfig,
    ObservationStore, Pipeline, ReplayQuery,
};
use pricevar::{Currency, Money};

#[derive(Parser)]
#[command(name = "pricevar", version, about = "Multi-vantage price variation measurement")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the coordinator and the requester API.
    Serve(ServeArgs),
    /// Run a vantage agent.
    Agent(AgentArgs),
    /// Print stored observations as JSON lines.
    Replay(ReplayArgs),
    /// Build catalogs and plans, and run scheduled crawls.
    #[command(subcommand)]
    Crawl(CrawlCommand),
    /// Compute a report from stored observations.
    Analyze(AnalyzeArgs),
    /// Simulated retailer fleet for testing end to end.
    #[command(subcommand)]
    Sim(SimCommand),
    /// Exchange-rate windows and the currency gate.
    #[command(subcommand)]
    Fx(FxCommand),
}

#[derive(Args)]
struct RatesArgs {
    /// Rate records file (`date,base,quote,low,high`).
    #[arg(long)]
    rates: PathBuf,
    #[arg(long, default_value = "USD")]
    reference: String,
}

impl RatesArgs {
    fn load(&self) -> Result<RateTable> {
        let reference = Currency::new(&self.reference)?;
        let file = std::fs::File::open(&self.rates).with_context(|| format!("opening {}", self.rates.display()))?;
        Ok(RateTable::from_reader(std::io::BufReader::new(file), reference)?)
    }
}

#[derive(Args)]
struct ServeArgs {
    /// Address agents connect to.
    #[arg(long, default_value = "0.0.0.0:7700")]
    agents: String,
    /// Address of the HTTP API.
    #[arg(long, default_value = "0.0.0.0:8080")]
    api: SocketAddr,
    #[arg(long)]
    store: PathBuf,
    #[command(flatten)]
    rates: RatesArgs,
    /// Daily rate source; new records are appended to the rates file.
    #[arg(long)]
    rates_endpoint: Option<String>,
    #[arg(long, value_parser = humantime::parse_duration, default_value = "1h")]
    ingest_every: Duration,
    #[arg(long, default_value_t = 3)]
    repetitions: u32,
    #[arg(long, value_parser = humantime::parse_duration, default_value = "10m")]
    spacing: Duration,
    #[arg(long, value_parser = humantime::parse_duration, default_value = "5s")]
    sync_window: Duration,
    /// fsync every append.
    #[arg(long)]
    fsync: bool,
}

#[derive(Args)]
struct FetchArgs {
    /// `host=ip:port` override, repeatable.
    #[arg(long = "resolve", value_parser = parse_resolve)]
    resolve: Vec<(String, SocketAddr)>,
    /// `Name: value` header added to every fetch, repeatable.
    #[arg(long = "header", value_parser = parse_header)]
    headers: Vec<(String, String)>,
    #[arg(long, value_parser = humantime::parse_duration, default_value = "20s")]
    timeout: Duration,
}

impl FetchArgs {
    fn config(&self) -> FetchConfig {
        FetchConfig {
            timeout: self.timeout,
            resolve: self.resolve.clone(),
            extra_headers: self.headers.clone(),
        }
    }
}

#[derive(Args)]
struct AgentArgs {
    #[arg(long)]
    id: String,
    #[arg(long)]
    country: String,
    #[arg(long, default_value = "")]
    city: String,
    /// Coordinator `host:port`.
    #[arg(long)]
    coordinator: String,
    #[command(flatten)]
    fetch: FetchArgs,
}

#[derive(Args)]
struct QueryArgs {
    #[arg(long)]
    store: PathBuf,
    #[arg(long)]
    domain: Option<String>,
    #[arg(long)]
    from: Option<NaiveDate>,
    #[arg(long)]
    to: Option<NaiveDate>,
}

impl QueryArgs {
    fn query(&self) -> ReplayQuery {
        ReplayQuery {
            domain: self.domain.as_deref().map(str::to_ascii_lowercase),
            from: self.from,
            to: self.to,
            ..ReplayQuery::default()
        }
    }
}

#[derive(Args)]
struct ReplayArgs {
    #[command(flatten)]
    query: QueryArgs,
    #[arg(long)]
    vantage: Option<String>,
}

#[derive(Subcommand)]
enum CrawlCommand {
    /// Build a catalog file from a retailer's listing pages.
    Ingest(IngestArgs),
    /// Sample products from a catalog file into a plan.
    Plan(PlanArgs),
    /// Run plans against the agents that connect.
    Run(RunArgs),
}

#[derive(Args)]
struct IngestArgs {
    /// First listing page.
    #[arg(long)]
    listing: String,
    /// Regex product URIs must match.
    #[arg(long)]
    pattern: String,
    /// Selector confirmed on one exemplar product page.
    #[arg(long)]
    selector: String,
    #[arg(long, default_value_t = 50)]
    max_pages: usize,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    fetch: FetchArgs,
}

#[derive(Args)]
struct PlanArgs {
    #[arg(long)]
    domain: String,
    #[arg(long)]
    catalog_file: PathBuf,
    #[arg(long, default_value_t = 100)]
    cap: usize,
    #[arg(long, default_value_t = 7)]
    waves: u32,
    #[arg(long, value_parser = humantime::parse_duration, default_value = "24h")]
    period: Duration,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Comma-separated vantage ids; default is every registered agent.
    #[arg(long, value_delimiter = ',')]
    vantages: Vec<String>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long = "plan", required = true)]
    plans: Vec<PathBuf>,
    #[arg(long)]
    store: PathBuf,
    #[command(flatten)]
    rates: RatesArgs,
    #[arg(long, default_value = "0.0.0.0:7700")]
    agents: String,
    /// Agents to wait for before the first wave.
    #[arg(long, default_value_t = 2)]
    min_agents: usize,
    #[arg(long, default_value_t = 4)]
    parallelism: usize,
    #[arg(long, value_parser = humantime::parse_duration, default_value = "2s")]
    politeness: Duration,
    /// Wave reports, as a JSON report.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum AnalyzeKind {
    Summary,
    Ratios,
    Fit,
    Grid,
    Locations,
    Thirdparty,
}

#[derive(Args)]
struct AnalyzeArgs {
    kind: AnalyzeKind,
    #[command(flatten)]
    query: QueryArgs,
    #[command(flatten)]
    rates: RatesArgs,
    /// Locations for `grid`; default is all seen.
    #[arg(long, value_delimiter = ',')]
    locations: Vec<String>,
    #[arg(long)]
    out: PathBuf,
    /// Plot data for `ratios`, `grid` and `locations`.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Subcommand)]
enum SimCommand {
    /// Write a generated fleet of pricing policies.
    Generate {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 21)]
        retailers: usize,
        #[arg(long, default_value_t = 2013)]
        seed: u64,
    },
    /// Serve policies until interrupted.
    Serve {
        #[arg(long)]
        policies: PathBuf,
        #[arg(long, default_value = "127.0.0.1")]
        host: std::net::IpAddr,
        #[arg(long, default_value_t = 0)]
        base_port: u16,
    },
    /// Write the simulator's rate windows for a date range.
    Rates {
        #[arg(long)]
        from: NaiveDate,
        #[arg(long)]
        to: NaiveDate,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fleet, agents and crawl in one process; prints one ACK line per
    /// durably stored observation. Rerun with the same store to resume.
    Crawl(SimCrawlArgs),
}

#[derive(Args)]
struct SimCrawlArgs {
    #[arg(long)]
    store: PathBuf,
    #[arg(long, default_value_t = 21)]
    retailers: usize,
    #[arg(long, default_value_t = 100)]
    products: usize,
    #[arg(long, default_value_t = 7)]
    waves: u32,
    #[arg(long, value_parser = humantime::parse_duration, default_value = "2s")]
    period: Duration,
    #[arg(long, value_delimiter = ',', default_value = "US,FI,DE,BR,GB,CA")]
    regions: Vec<String>,
    #[arg(long, default_value_t = 2013)]
    seed: u64,
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Subcommand)]
enum FxCommand {
    /// Gate a set of prices (`"100.00 EUR"`) observed on one day.
    Verify {
        #[command(flatten)]
        rates: RatesArgs,
        #[arg(long)]
        date: NaiveDate,
        #[arg(required = true, num_args = 2..)]
        prices: Vec<String>,
    },
    /// Fetch one day of rate windows and append them to the rates file.
    Ingest {
        #[arg(long)]
        endpoint: String,
        #[command(flatten)]
        rates: RatesArgs,
        #[arg(long)]
        date: Option<NaiveDate>,
    },
}

fn parse_resolve(s: &str) -> Result<(String, SocketAddr), String> {
    let (host, addr) = s.split_once('=').ok_or("expected host=ip:port")?;
    Ok((host.to_string(), addr.parse().map_err(|e| format!("{addr}: {e}"))?))
}

fn parse_header(s: &str) -> Result<(String, String), String> {
    let (k, v) = s.split_once(':').ok_or("expected Name: value")?;
    Ok((k.trim().to_string(), v.trim().to_string()))
}

fn parse_money(s: &str) -> Result<Money> {
    let (amount, code) = s
        .trim()
        .rsplit_once(' ')
        .ok_or_else(|| anyhow!("expected \"<amount> <CODE>\", got {s:?}"))?;
    Ok(Money::new(Decimal::from_str(amount.trim())?, Currency::new(code)?)?)
}

fn write_report<T: Serialize + serde::de::DeserializeOwned>(path: &Path, kind: &str, data: T) -> Result<()> {
    Report::new(kind, data).write_json(path)?;
    eprintln!("wrote {kind} report to {}", path.display());
    Ok(())
}

fn load_profiles(query: &QueryArgs, table: &RateTable) -> Result<Vec<ProductProfile>> {
    let store = ObservationStore::open(&query.store)?;
    let obs = store.replay(&query.query())?.collect::<Result<Vec<_>, _>>()?;
    let (profiles, rejected) = profiles_from_observations(obs, table);
    if !rejected.is_empty() {
        eprintln!("{} product-waves could not be profiled", rejected.len());
        for (uri, wave, e) in rejected.iter().take(5) {
            tracing::debug!(%uri, %wave, error = %e, "not profiled");
        }
    }
    Ok(profiles)
}

async fn serve(args: ServeArgs) -> Result<()> {
    let table = args.rates.load()?;
    let rates = RateHandle::new(table);
    if let Some(endpoint) = &args.rates_endpoint {
        let client = RateIngestClient::new(endpoint)?;
        spawn_periodic_ingest(client, args.rates.rates.clone(), rates.clone(), args.ingest_every);
    }
    let coordinator = Coordinator::new(CoordinatorConfig {
        sync_window: args.sync_window,
        ..CoordinatorConfig::default()
    });
    let addr = coordinator.listen(&args.agents).await?;
    let store = Arc::new(ObservationStore::open(&args.store)?.with_fsync(args.fsync));
    let pipeline = Pipeline::new(coordinator, store, PriceParser::default());
    let service = CheckService::new(
        pipeline,
        rates,
        CheckConfig {
            repetitions: args.repetitions,
            repetition_spacing: args.spacing,
            ..CheckConfig::default()
        },
    );
    let listener = tokio::net::TcpListener::bind(args.api).await?;
    eprintln!("agents on {addr}, API on {}", listener.local_addr()?);
    axum::serve(listener, api::router(service)).await?;
    Ok(())
}

async fn agent(args: AgentArgs) -> Result<()> {
    let mut cfg = AgentConfig::new(&args.id, &args.country, &args.city, &args.coordinator);
    cfg.fetch = args.fetch.config();
    cfg.reconnect = true;
    run_agent(cfg).await?;
    Ok(())
}

fn replay(args: ReplayArgs) -> Result<()> {
    let store = ObservationStore::open(&args.query.store)?;
    let mut query = args.query.query();
    query.vantage = args.vantage;
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    for o in store.replay(&query)? {
        serde_json::to_writer(&mut out, &o?)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

async fn crawl(cmd: CrawlCommand) -> Result<()> {
    match cmd {
        CrawlCommand::Ingest(a) => {
            let selector = PriceSelector::from_str(&a.selector)?;
            let pattern = Regex::new(&a.pattern)?;
            let pages = fetch_listing(&a.fetch.config(), &a.listing, a.max_pages).await?;
            let catalog = catalog_ingest(&pages, &pattern, &selector)?;
            write_catalog(&a.out, &catalog)?;
            eprintln!("{} products from {} listing pages", catalog.len(), pages.len());
        }
        CrawlCommand::Plan(a) => {
            let catalog = read_catalog(&a.catalog_file)?;
            let plan = CrawlPlan::new(&a.domain, &catalog, a.cap, a.waves, a.period, a.seed)?.with_vantages(&a.vantages);
            plan.validate()?;
            plan.write_json(&a.out)?;
            eprintln!("plan {} with {} products", plan.plan_id, plan.products.len());
        }
        CrawlCommand::Run(a) => {
            let plans = a
                .plans
                .iter()
                .map(|p| CrawlPlan::read_json(p))
                .collect::<Result<Vec<_>, _>>()?;
            let rates = RateHandle::new(a.rates.load()?);
            let coordinator = Coordinator::new(CoordinatorConfig::default());
            let addr = coordinator.listen(&a.agents).await?;
            eprintln!("waiting for {} agents on {addr}", a.min_agents);
            while !coordinator.wait_for_agents(a.min_agents, Duration::from_secs(60)).await {
                eprintln!("{} agents registered so far", coordinator.vantage_ids().len());
            }
            let store = Arc::new(ObservationStore::open(&a.store)?);
            let pipeline = Pipeline::new(coordinator, store, PriceParser::default());
            let config = CrawlConfig {
                parallelism: a.parallelism,
                politeness: a.politeness,
                ..CrawlConfig::default()
            };
            let results = run_plans(&pipeline, &plans, &config, &rates, None).await;
            let mut reports = Vec::new();
            for (plan, r) in plans.iter().zip(results) {
                match r {
                    Ok(rs) => reports.extend(rs),
                    Err(e) => eprintln!("plan {} failed: {e}", plan.plan_id),
                }
            }
            if let Some(path) = &a.report {
                write_report(path, "waves", reports)?;
            }
        }
    }
    Ok(())
}

fn analyze(a: AnalyzeArgs) -> Result<()> {
    let table = a.rates.load()?;
    if let AnalyzeKind::Thirdparty = a.kind {
        let store = ObservationStore::open(&a.query.store)?;
        let mut pages: BTreeMap<String, Vec<String>> = BTreeMap::new();
        let mut seen = std::collections::HashSet::new();
        for o in store.replay(&a.query.query())? {
            let o = o?;
            if !seen.insert(o.snapshot_ref.clone()) {
                continue;
            }
            if let (Some(domain), Some(body)) = (o.domain(), store.snapshots().get(&o.snapshot_ref)?) {
                pages.entry(domain).or_default().push(body);
            }
        }
        return write_report(&a.out, "thirdparty", third_party_scan(&pages));
    }
    let profiles = load_profiles(&a.query, &table)?;
    match a.kind {
        AnalyzeKind::Summary => {
            #[derive(Serialize, serde::Deserialize)]
            struct Summary {
                retailers: Vec<pricevar::analytics::RetailerSummary>,
                bands: Vec<pricevar::analytics::PriceBand>,
            }
            let points = ratio_vs_price(&profiles);
            let data = Summary {
                retailers: summarize_all(&profiles),
                bands: band_report(&points, &default_band_edges()),
            };
            for s in &data.retailers {
                println!(
                    "{:<28} n={:<5} extent={:.3} median={} q25={} q75={}",
                    s.domain,
                    s.n_products,
                    s.variation_extent,
                    s.ratio_stats.median.round_dp(4),
                    s.ratio_stats.q25.round_dp(4),
                    s.ratio_stats.q75.round_dp(4)
                );
            }
            write_report(&a.out, "summary", data)?;
        }
        AnalyzeKind::Ratios => {
            let points = ratio_vs_price(&profiles);
            if let Some(csv) = &a.csv {
                ratio_points_csv(&points, std::fs::File::create(csv)?)?;
            }
            write_report(&a.out, "ratios", points)?;
        }
        AnalyzeKind::Fit => {
            let domains: Vec<String> = match &a.query.domain {
                Some(d) => vec![d.to_ascii_lowercase()],
                None => by_domain(&profiles).into_keys().collect(),
            };
            let mut models = Vec::new();
            for d in &domains {
                for (loc, fit) in fit_domain(d, &profiles) {
                    match fit {
                        Ok(m) => {
                            println!("{d:<28} {loc:<10} a={} b={} {:?}", m.a.round_dp(6), m.b.round_dp(4), m.class);
                            models.push(m);
                        }
                        Err(e) => eprintln!("{d} {loc}: {e}"),
                    }
                }
            }
            write_report(&a.out, "fit", models)?;
        }
        AnalyzeKind::Grid => {
            let domain = a
                .query
                .domain
                .as_deref()
                .ok_or_else(|| anyhow!("grid needs --domain"))?
                .to_ascii_lowercase();
            let grid = pairwise_grid(&domain, &profiles, &a.locations)?;
            if let Some(csv) = &a.csv {
                grid_csv(&grid, std::fs::File::create(csv)?)?;
            }
            write_report(&a.out, "grid", grid)?;
        }
        AnalyzeKind::Locations => {
            let report = location_ratios(&profiles);
            for (d, locs) in &report.never_cheapest {
                println!("{d:<28} never cheapest: {}", locs.join(", "));
            }
            if let Some(csv) = &a.csv {
                location_ratios_csv(&report.ratios, std::fs::File::create(csv)?)?;
            }
            write_report(&a.out, "locations", report)?;
        }
        AnalyzeKind::Thirdparty => unreachable!("handled above"),
    }
    Ok(())
}

async fn sim(cmd: SimCommand) -> Result<()> {
    match cmd {
        SimCommand::Generate { out, retailers, seed } => {
            let fleet = generate_fleet(&FleetSpec {
                retailers,
                seed,
                ..FleetSpec::default()
            });
            write_policies(&out, &fleet)?;
            eprintln!("{} policies in {}", fleet.len(), out.display());
        }
        SimCommand::Serve {
            policies,
            host,
            base_port,
        } => {
            let policies = load_policies(&policies)?;
            let fleet = serve_fleet(policies, SimRates::default(), BindSpec { host, base_port }).await?;
            for e in fleet.endpoints() {
                println!("{}\t{}", e.domain, e.addr);
            }
            std::io::stdout().flush()?;
            tokio::signal::ctrl_c().await?;
        }
        SimCommand::Rates { from, to, out } => {
            if to < from {
                bail!("--to is before --from");
            }
            let table = SimRates::default().table(from, to);
            table.write_records(std::fs::File::create(&out)?)?;
        }
        SimCommand::Crawl(a) => sim_crawl(a).await?,
    }
    Ok(())
}

async fn sim_crawl(a: SimCrawlArgs) -> Result<()> {
    let spec = SimCrawlSpec {
        fleet: FleetSpec {
            retailers: a.retailers,
            seed: a.seed,
            ..FleetSpec::default()
        },
        regions: a.regions,
        cap: a.products,
        waves: a.waves,
        period: a.period,
        seed: a.seed,
        ..SimCrawlSpec::default()
    };
    let (tx, mut rx) = tokio::sync::mpsc::unbounded_channel();
    let printer = tokio::task::spawn_blocking(move || -> std::io::Result<()> {
        let stdout = std::io::stdout();
        while let Some(p) = rx.blocking_recv() {
            let mut out = stdout.lock();
            match p {
                CrawlProgress::Stored { keys, .. } => {
                    for k in keys {
                        writeln!(
                            out,
                            "ACK\t{}\t{}\t{}\t{}",
                            k.check_id,
                            k.repetition,
                            k.vantage,
                            k.profile.as_deref().unwrap_or("-")
                        )?;
                    }
                }
                CrawlProgress::WaveStarted { plan_id, wave } => writeln!(out, "WAVE\tstarted\t{plan_id}\t{wave}")?,
                CrawlProgress::WaveCompleted { plan_id, wave } => writeln!(out, "WAVE\tcompleted\t{plan_id}\t{wave}")?,
                CrawlProgress::WaveSkipped { plan_id, wave, reason } => {
                    writeln!(out, "WAVE\tskipped\t{plan_id}\t{wave}\t{reason}")?
                }
            }
            out.flush()?;
        }
        Ok(())
    });
    let started = std::time::Instant::now();
    let run = run_sim_crawl(&spec, &a.store, Some(tx)).await?;
    let mut reports = Vec::new();
    for (plan, r) in run.plans.iter().zip(run.results) {
        match r {
            Ok(rs) => reports.extend(rs),
            Err(e) => eprintln!("plan {} failed: {e}", plan.plan_id),
        }
    }
    drop(run.bed);
    printer.await??;
    println!("DONE\t{} waves\t{:.1}s", reports.len(), started.elapsed().as_secs_f64());
    if let Some(path) = &a.report {
        write_report(path, "waves", reports)?;
    }
    Ok(())
}

async fn fx(cmd: FxCommand) -> Result<()> {
    match cmd {
        FxCommand::Verify { rates, date, prices } => {
            let table = rates.load()?;
            let prices = prices.iter().map(|p| parse_money(p)).collect::<Result<Vec<_>>>()?;
            let verdict = currency_gate_prices(&prices, date, &table)?;
            println!("{}", serde_json::to_string_pretty(&verdict)?);
        }
        FxCommand::Ingest { endpoint, rates, date } => {
            let table = rates.load()?;
            let client = RateIngestClient::new(&endpoint)?;
            let date = date.unwrap_or_else(|| Utc::now().date_naive());
            let next = client.snapshot_day(date, &table, &rates.rates).await?;
            eprintln!("{} records ({} new)", next.records().len(), next.records().len() - table.records().len());
        }
    }
    Ok(())
}

#[tokio::main]
async fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new("warn")))
        .with_writer(std::io::stderr)
        .init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Serve(a) => serve(a).await,
        Command::Agent(a) => agent(a).await,
        Command::Replay(a) => replay(a),
        Command::Crawl(c) => crawl(c).await,
        Command::Analyze(a) => analyze(a),
        Command::Sim(c) => sim(c).await,
        Command::Fx(c) => fx(c).await,
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
