use std::path::Path;
use std::time::Duration;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::{sample_products, CatalogEntry, CrawlError};
use crate::analytics::ProductProfile;
use crate::vantage::uri_domain;

pub const DEFAULT_CAP: usize = 100;
pub const DEFAULT_WAVES: u32 = 7;
pub const DEFAULT_PERIOD: Duration = Duration::from_secs(24 * 3600);

mod period {
    use std::time::Duration;

    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&humantime::format_duration(*d).to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        let text = String::deserialize(d)?;
        humantime::parse_duration(&text).map_err(serde::de::Error::custom)
    }
}

/// Repeated multi-vantage crawl of one retailer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrawlPlan {
    pub plan_id: String,
    pub domain: String,
    pub products: Vec<CatalogEntry>,
    #[serde(with = "period")]
    pub wave_period: Duration,
    pub wave_count: u32,
    /// Vantage ids; empty means every agent registered at wave start.
    #[serde(default)]
    pub vantages: Vec<String>,
    pub seed: u64,
    /// Slot of wave 0; the first run fills it in.
    #[serde(default)]
    pub start_at: Option<DateTime<Utc>>,
    pub cap: usize,
}

impl CrawlPlan {
    /// Samples up to `cap` products of `catalog` that belong to `domain`.
    pub fn new(
        domain: &str,
        catalog: &[CatalogEntry],
        cap: usize,
        wave_count: u32,
        wave_period: Duration,
        seed: u64,
    ) -> Result<CrawlPlan, CrawlError> {
        let own: Vec<CatalogEntry> = catalog
            .iter()
            .filter(|e| uri_domain(&e.uri).as_deref() == Some(domain))
            .cloned()
            .collect();
        let plan = CrawlPlan {
            plan_id: format!("{domain}-{seed}"),
            domain: domain.to_string(),
            products: sample_products(&own, cap, seed)?,
            wave_period,
            wave_count,
            vantages: Vec::new(),
            seed,
            start_at: None,
            cap,
        };
        plan.validate()?;
        Ok(plan)
    }

    pub fn with_vantages(mut self, vantages: &[String]) -> Self {
        self.vantages = vantages.to_vec();
        self
    }

    pub fn validate(&self) -> Result<(), CrawlError> {
        let bad = |m: String| Err(CrawlError::InvalidPlan(format!("{}: {m}", self.plan_id)));
        if self.plan_id.is_empty() || self.plan_id.contains(char::is_whitespace) {
            return bad("plan id must be non-empty without whitespace".into());
        }
        if self.products.is_empty() || self.products.len() > self.cap {
            return bad(format!("need 1..={} products, got {}", self.cap, self.products.len()));
        }
        if self.wave_count == 0 {
            return bad("wave_count must be at least 1".into());
        }
        if self.wave_period.is_zero() && self.wave_count > 1 {
            return bad("wave_period must be positive".into());
        }
        if self.vantages.len() == 1 {
            return bad("need at least two vantages".into());
        }
        if let Some(e) = self
            .products
            .iter()
            .find(|e| uri_domain(&e.uri).as_deref() != Some(self.domain.as_str()))
        {
            return bad(format!("{} is not on {}", e.uri, self.domain));
        }
        Ok(())
    }

    pub fn read_json(path: &Path) -> Result<CrawlPlan, CrawlError> {
        let plan: CrawlPlan = serde_json::from_str(&std::fs::read_to_string(path)?)
            .map_err(|e| CrawlError::InvalidPlan(format!("{}: {e}", path.display())))?;
        plan.validate()?;
        Ok(plan)
    }

    pub fn write_json(&self, path: &Path) -> Result<(), CrawlError> {
        let text = serde_json::to_string_pretty(self).map_err(|e| CrawlError::InvalidPlan(e.to_string()))?;
        std::fs::write(path, text)?;
        Ok(())
    }

    pub fn wave_id(&self, wave: u32) -> String {
        format!("{}/w{wave}", self.plan_id)
    }

    /// Check id of product `index` (position in `products`) in `wave`.
    pub fn check_id(&self, wave: u32, index: usize) -> String {
        format!("{}/w{wave}/{index}", self.plan_id)
    }
}

/// Outcome of one executed wave.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveReport {
    pub plan_id: String,
    pub wave: u32,
    pub started_at: DateTime<Utc>,
    pub completed_at: DateTime<Utc>,
    pub profiles: Vec<ProductProfile>,
    /// Per-vantage fetch or extraction failures.
    pub failures: usize,
    pub observations: usize,
    /// Products that produced no observation at all.
    pub empty_products: Vec<String>,
    /// Products dropped from later waves after this one.
    pub dropped: Vec<String>,
}
