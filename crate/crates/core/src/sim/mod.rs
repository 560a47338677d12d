//! Simulated retailer fleet with fully specified pricing policies; the
//! ground truth every measurement claim is checked against.

pub mod fleet;
pub mod page;
pub mod policy;
pub mod server;

use std::path::Path;

use thiserror::Error;

use crate::money::Currency;

pub use fleet::{default_regions, domain_name, generate_fleet, FleetSpec, RegionSpec};
pub use page::{display_price, listing_page, product_page};
pub use policy::{
    price_for, price_for_arm, AbArm, AbNoise, AddressBlock, CatalogItem, PersonaRule, Predicate, PricingPolicy,
    RegionRule, RequestProfile, SimRates, TemplateId,
};
pub use server::{serve_fleet, BindSpec, Endpoint, Fleet, RequestRecord, REGION_HEADER, SESSION_COOKIE};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("unknown product {0}")]
    UnknownProduct(String),
    #[error("no rule for region {0}")]
    UnknownRegion(String),
    #[error("no simulator rate for {0}")]
    UnknownCurrency(Currency),
    #[error("invalid policy: {0}")]
    InvalidPolicy(String),
    #[error("cannot bind: {0}")]
    Bind(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Reads every `*.json` policy in `dir`, sorted by file name.
pub fn load_policies(dir: &Path) -> Result<Vec<PricingPolicy>, SimError> {
    let mut paths: Vec<_> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    paths
        .iter()
        .map(|p| {
            let text = std::fs::read_to_string(p)?;
            let policy: PricingPolicy = serde_json::from_str(&text)
                .map_err(|e| SimError::InvalidPolicy(format!("{}: {e}", p.display())))?;
            policy.validate()?;
            Ok(policy)
        })
        .collect()
}

/// Writes one `<domain>.json` per policy.
pub fn write_policies(dir: &Path, policies: &[PricingPolicy]) -> Result<(), SimError> {
    std::fs::create_dir_all(dir)?;
    for p in policies {
        let text = serde_json::to_string_pretty(p).map_err(|e| SimError::InvalidPolicy(e.to_string()))?;
        std::fs::write(dir.join(format!("{}.json", p.domain)), text)?;
    }
    Ok(())
}
