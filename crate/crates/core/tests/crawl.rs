use std::collections::HashSet;
use std::time::Duration;

use chrono::Utc;
use regex::Regex;

use pricevar::crawl::{
    catalog_ingest, fetch_listing, sample_products, schedule_waves, CatalogEntry, CrawlConfig, CrawlError, CrawlPlan,
    CrawlProgress,
};
use pricevar::extract::PriceSelector;
use pricevar::sim::{generate_fleet, FleetSpec, PricingPolicy};
use pricevar::testbed::{agents_for_regions, AgentSpec, Testbed};
use pricevar::vantage::{CoordinatorConfig, ReplayQuery, StoreEvent};

fn fleet(n: usize, catalog: usize) -> Vec<PricingPolicy> {
    generate_fleet(&FleetSpec {
        retailers: n,
        catalog_min: catalog,
        catalog_max: catalog,
        ..FleetSpec::default()
    })
}

fn quick() -> CoordinatorConfig {
    CoordinatorConfig {
        go_lead: Duration::from_millis(30),
        fetch_timeout: Duration::from_secs(5),
        result_grace: Duration::from_secs(2),
        ..CoordinatorConfig::default()
    }
}

fn fast_crawl() -> CrawlConfig {
    CrawlConfig {
        politeness: Duration::ZERO,
        agent_wait: Duration::from_millis(300),
        ..CrawlConfig::default()
    }
}

fn catalog_of(bed: &Testbed, policy: &PricingPolicy) -> Vec<CatalogEntry> {
    policy
        .catalog
        .iter()
        .map(|i| CatalogEntry {
            uri: bed.fleet.product_uri(&policy.domain, &i.id).unwrap(),
            selector: policy.template.price_selector(),
        })
        .collect()
}

fn inclusion_counts(n: usize, cap: usize, seeds: u64) -> Vec<usize> {
    let sel = PriceSelector::dom_path("body/span").unwrap();
    let catalog: Vec<CatalogEntry> = (0..n)
        .map(|i| CatalogEntry {
            uri: format!("https://s.test/p/{i}"),
            selector: sel.clone(),
        })
        .collect();
    let mut counts = vec![0usize; n];
    for seed in 0..seeds {
        for e in sample_products(&catalog, cap, seed).unwrap() {
            let i: usize = e.uri.rsplit('/').next().unwrap().parse().unwrap();
            counts[i] += 1;
        }
    }
    counts
}

#[test]
fn sampling_is_uniform_over_seeds() {
    let seeds = 10_000u64;
    // Every item's inclusion frequency within 3 sigma of cap/|catalog|.
    let (n, cap) = (40, 10);
    let p = cap as f64 / n as f64;
    let sigma = (seeds as f64 * p * (1.0 - p)).sqrt();
    let counts = inclusion_counts(n, cap, seeds);
    for (i, c) in counts.iter().enumerate() {
        let z = (*c as f64 - seeds as f64 * p).abs() / sigma;
        assert!(z <= 3.0, "item {i}: {z:.2} sigma");
    }
    // At 250 items the largest of 250 z-scores passes 3 sigma about half the
    // time even for a perfect sampler, so the full-size catalog is checked
    // with a chi-square statistic instead (df = 249, 0.999 quantile ~ 330).
    let (n, cap) = (250, 100);
    let p = cap as f64 / n as f64;
    let expected = seeds as f64 * p;
    let chi2: f64 = inclusion_counts(n, cap, seeds)
        .iter()
        .map(|c| (*c as f64 - expected).powi(2) / (expected * (1.0 - p)))
        .sum();
    assert!(chi2 < 330.0, "chi-square {chi2:.1}");
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn listing_of_250_links_becomes_a_250_entry_catalog() {
    let dir = tempfile::tempdir().unwrap();
    let policies = fleet(1, 250);
    let policy = policies[0].clone();
    let bed = Testbed::start(policies, &[], dir.path(), quick()).await.unwrap();
    let fetch = bed.agent_config(&AgentSpec::new("us-0", "US", "Boston")).fetch;
    let start = format!("{}/list", bed.fleet.base_url(&policy.domain).unwrap());
    let pages = fetch_listing(&fetch, &start, 10).await.unwrap();
    assert_eq!(pages.len(), 3);
    let pattern = Regex::new(r"/p/[0-9]+$").unwrap();
    let catalog = catalog_ingest(&pages, &pattern, &policy.template.price_selector()).unwrap();
    assert_eq!(catalog.len(), 250);
    let expected: HashSet<String> = catalog_of(&bed, &policy).into_iter().map(|e| e.uri).collect();
    assert_eq!(catalog.iter().map(|e| e.uri.clone()).collect::<HashSet<_>>(), expected);

    let plan = CrawlPlan::new(&policy.domain, &catalog, 100, 7, Duration::from_secs(86_400), 5).unwrap();
    assert_eq!(plan.products.len(), 100);
    let path = dir.path().join("plan.json");
    plan.write_json(&path).unwrap();
    assert_eq!(CrawlPlan::read_json(&path).unwrap(), plan);
    assert!(std::fs::read_to_string(&path).unwrap().contains("\"1day\""));
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn compressed_week_runs_seven_spaced_waves() {
    let dir = tempfile::tempdir().unwrap();
    let policies = fleet(1, 6);
    let policy = policies[0].clone();
    let agents = agents_for_regions(&["US", "FI", "DE"]);
    let bed = Testbed::start(policies, &agents, dir.path(), quick()).await.unwrap();
    let period = Duration::from_millis(400);
    let plan = CrawlPlan::new(&policy.domain, &catalog_of(&bed, &policy), 4, 7, period, 11).unwrap();
    let (tx, mut rx) = tokio::sync::mpsc::unbounded_channel();
    let reports = schedule_waves(&bed.pipeline, &plan, &fast_crawl(), &bed.rates, Some(tx))
        .await
        .unwrap();
    assert_eq!(reports.len(), 7);
    for w in reports.windows(2) {
        assert!(w[1].started_at > w[0].started_at);
        assert!(w[1].started_at >= w[0].completed_at);
        assert!((w[1].started_at - w[0].started_at).to_std().unwrap() >= period);
    }
    for r in &reports {
        assert_eq!(r.observations, 12);
        assert_eq!(r.profiles.len(), 4);
        assert!(r.profiles.iter().all(|p| p.gate.passed));
    }
    let mut acked = 0;
    while let Ok(p) = rx.try_recv() {
        if let CrawlProgress::Stored { keys, .. } = p {
            acked += keys.len();
        }
    }
    assert_eq!(acked, 7 * 12);
    let stored = bed
        .store()
        .replay(&ReplayQuery::domain(&policy.domain))
        .unwrap()
        .count();
    assert_eq!(stored, 7 * 12);
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn single_wave_missing_agents_and_dead_links() {
    let dir = tempfile::tempdir().unwrap();
    let policies = fleet(1, 3);
    let policy = policies[0].clone();
    let agents = agents_for_regions(&["US", "GB"]);
    let bed = Testbed::start(policies, &agents, dir.path(), quick()).await.unwrap();
    let mut catalog = catalog_of(&bed, &policy);

    let one = CrawlPlan::new(&policy.domain, &catalog, 3, 1, Duration::from_secs(3600), 1).unwrap();
    let before = Utc::now();
    let reports = schedule_waves(&bed.pipeline, &one, &fast_crawl(), &bed.rates, None).await.unwrap();
    assert_eq!(reports.len(), 1);
    assert!((reports[0].started_at - before).num_milliseconds() < 1000);

    let ghost = CrawlPlan::new(&policy.domain, &catalog, 3, 1, Duration::from_secs(1), 2)
        .unwrap()
        .with_vantages(&["us-0".into(), "ghost-9".into()]);
    let reports = schedule_waves(&bed.pipeline, &ghost, &fast_crawl(), &bed.rates, None).await.unwrap();
    assert!(reports.is_empty());
    let skipped = bed.store().events().unwrap().into_iter().any(|e| {
        matches!(e, StoreEvent::WaveSkipped { plan_id, reason, .. }
            if plan_id == ghost.plan_id && reason.contains("ghost-9"))
    });
    assert!(skipped);

    let dead = bed.fleet.product_uri(&policy.domain, "no-such-item").unwrap();
    catalog.push(CatalogEntry {
        uri: dead.clone(),
        selector: policy.template.price_selector(),
    });
    let plan = CrawlPlan::new(&policy.domain, &catalog, 10, 5, Duration::from_millis(100), 3).unwrap();
    let reports = schedule_waves(&bed.pipeline, &plan, &fast_crawl(), &bed.rates, None).await.unwrap();
    assert_eq!(reports.len(), 5);
    assert_eq!(reports[2].dropped, vec![dead.clone()]);
    assert!(reports[3].empty_products.is_empty());
    assert_eq!(reports[3].observations, 6);
    assert!(reports[3].failures == 0 && reports[0].failures == 2);
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn resume_skips_interrupted_and_missed_waves() {
    let dir = tempfile::tempdir().unwrap();
    let policies = fleet(1, 3);
    let policy = policies[0].clone();
    let agents = agents_for_regions(&["US", "GB"]);
    let bed = Testbed::start(policies, &agents, dir.path(), quick()).await.unwrap();
    let catalog = catalog_of(&bed, &policy);

    let period = Duration::from_millis(500);
    let plan = CrawlPlan::new(&policy.domain, &catalog, 3, 6, period, 4).unwrap();
    let origin = Utc::now() - chrono::Duration::milliseconds(1_700);
    let store = bed.store();
    let at = |ms: i64| origin + chrono::Duration::milliseconds(ms);
    store
        .append_event(&StoreEvent::WaveStarted { plan_id: plan.plan_id.clone(), wave: 0, at: at(0) })
        .unwrap();
    store
        .append_event(&StoreEvent::WaveCompleted {
            plan_id: plan.plan_id.clone(),
            wave: 0,
            at: at(100),
            observations: 6,
            failures: 0,
        })
        .unwrap();
    store
        .append_event(&StoreEvent::WaveStarted { plan_id: plan.plan_id.clone(), wave: 1, at: at(500) })
        .unwrap();
    // Coordinator died during wave 1; waves 2 (slot 1000..1500 ms) passed entirely.
    let reports = schedule_waves(&bed.pipeline, &plan, &fast_crawl(), &bed.rates, None).await.unwrap();
    let ran: Vec<u32> = reports.iter().map(|r| r.wave).collect();
    assert_eq!(ran, vec![3, 4, 5]);
    let skipped: Vec<(u32, String)> = store
        .events()
        .unwrap()
        .into_iter()
        .filter_map(|e| match e {
            StoreEvent::WaveSkipped { wave, reason, .. } => Some((wave, reason)),
            _ => None,
        })
        .collect();
    assert_eq!(skipped.len(), 2);
    assert_eq!(skipped[0], (1, "interrupted".to_string()));
    assert!(skipped[1].0 == 2 && skipped[1].1.starts_with("missed"));

    // Everything finished: a further run executes nothing.
    assert!(schedule_waves(&bed.pipeline, &plan, &fast_crawl(), &bed.rates, None)
        .await
        .unwrap()
        .is_empty());
}

#[test]
fn plan_validation() {
    let sel = PriceSelector::dom_path("body/span").unwrap();
    let cat = vec![CatalogEntry {
        uri: "https://a.test/p/1".into(),
        selector: sel,
    }];
    assert!(matches!(
        CrawlPlan::new("b.test", &cat, 10, 7, Duration::from_secs(1), 1),
        Err(CrawlError::EmptyCatalog)
    ));
    assert!(CrawlPlan::new("a.test", &cat, 10, 0, Duration::from_secs(1), 1).is_err());
    let plan = CrawlPlan::new("a.test", &cat, 10, 1, Duration::from_secs(1), 1).unwrap();
    assert!(plan.clone().with_vantages(&["only".into()]).validate().is_err());
    assert_eq!(plan.check_id(2, 0), "a.test-1/w2/0");
}
