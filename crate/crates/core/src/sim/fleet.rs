//! Random but reproducible retailer fleets.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rust_decimal::prelude::{FromPrimitive, ToPrimitive};
use rust_decimal::Decimal;
use rust_decimal_macros::dec;
use serde::{Deserialize, Serialize};

use super::policy::{AbNoise, CatalogItem, PricingPolicy, RegionRule, TemplateId};
use crate::money::Currency;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegionSpec {
    pub name: String,
    pub display_currency: Currency,
    pub locale: String,
}

impl RegionSpec {
    pub fn new(name: &str, code: &str, locale: &str) -> Self {
        RegionSpec {
            name: name.to_string(),
            display_currency: Currency::new(code).expect("valid code"),
            locale: locale.to_string(),
        }
    }
}

/// US, Finland, Germany, Brazil, UK, Canada, Sweden, Switzerland.
pub fn default_regions() -> Vec<RegionSpec> {
    vec![
        RegionSpec::new("US", "USD", "en-US"),
        RegionSpec::new("FI", "EUR", "fi-FI"),
        RegionSpec::new("DE", "EUR", "de-DE"),
        RegionSpec::new("BR", "BRL", "pt-BR"),
        RegionSpec::new("GB", "GBP", "en-GB"),
        RegionSpec::new("CA", "CAD", "en-CA"),
        RegionSpec::new("SE", "SEK", "sv-SE"),
        RegionSpec::new("CH", "CHF", "de-CH"),
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FleetSpec {
    pub retailers: usize,
    pub catalog_min: usize,
    pub catalog_max: usize,
    pub regions: Vec<RegionSpec>,
    /// Region priced at multiplier 1; others draw from `multiplier_range`.
    pub baseline_region: Option<String>,
    pub multiplier_range: (Decimal, Decimal),
    /// Base prices are log-uniform in this USD range.
    pub price_range: (Decimal, Decimal),
    /// Third-party hosts and the share of retailers embedding each.
    pub third_parties: Vec<(String, f64)>,
    pub ab_noise: AbNoise,
    pub seed: u64,
}

impl Default for FleetSpec {
    fn default() -> Self {
        FleetSpec {
            retailers: 21,
            catalog_min: 120,
            catalog_max: 250,
            regions: default_regions().into_iter().take(6).collect(),
            baseline_region: Some("US".into()),
            multiplier_range: (dec!(1.10), dec!(1.30)),
            price_range: (dec!(30), dec!(5000)),
            third_parties: vec![
                ("www.tracker-a.test".into(), 0.95),
                ("ads.tracker-b.test".into(), 0.65),
                ("cdn.widgets-c.test".into(), 0.30),
            ],
            ab_noise: AbNoise::default(),
            seed: 2013,
        }
    }
}

pub fn domain_name(i: usize) -> String {
    format!("simshop-{i}.test")
}

pub fn generate_fleet(spec: &FleetSpec) -> Vec<PricingPolicy> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut embeds: Vec<Vec<String>> = vec![Vec::new(); spec.retailers];
    for (host, share) in &spec.third_parties {
        let count = (share * spec.retailers as f64).round() as usize;
        let mut order: Vec<usize> = (0..spec.retailers).collect();
        order.shuffle(&mut rng);
        for &i in order.iter().take(count) {
            embeds[i].push(host.clone());
        }
    }
    let (lo_p, hi_p) = (
        spec.price_range.0.to_f64().unwrap_or(1.0).ln(),
        spec.price_range.1.to_f64().unwrap_or(1.0).ln(),
    );
    (0..spec.retailers)
        .map(|i| {
            let size = rng.random_range(spec.catalog_min..=spec.catalog_max.max(spec.catalog_min));
            let catalog = (0..size)
                .map(|k| {
                    let price = rng.random_range(lo_p..=hi_p).exp();
                    CatalogItem {
                        id: format!("{}", 1000 + k),
                        name: format!("Item {k} of shop {i}"),
                        base: Decimal::from_f64(price).unwrap_or(Decimal::ONE).round_dp(2).max(dec!(0.01)),
                        currency: Currency::USD,
                    }
                })
                .collect();
            let region_rules = spec
                .regions
                .iter()
                .map(|r| {
                    let multiplier = if spec.baseline_region.as_deref() == Some(r.name.as_str()) {
                        Decimal::ONE
                    } else {
                        draw_decimal(&mut rng, spec.multiplier_range, 3)
                    };
                    (
                        r.name.clone(),
                        RegionRule {
                            multiplier,
                            surcharge: Decimal::ZERO,
                            display_currency: r.display_currency,
                            locale: r.locale.clone(),
                        },
                    )
                })
                .collect::<BTreeMap<_, _>>();
            PricingPolicy {
                domain: domain_name(i),
                template: if i % 2 == 0 { TemplateId::Classic } else { TemplateId::Grid },
                catalog,
                region_rules,
                persona_rules: Vec::new(),
                ab_noise: spec.ab_noise,
                address_blocks: Vec::new(),
                default_region: spec.baseline_region.clone(),
                third_parties: embeds[i].clone(),
                seed: spec.seed.wrapping_add(i as u64),
            }
        })
        .collect()
}

/// Uniform draw in `[lo, hi]` on a grid of `dp` decimal places.
fn draw_decimal<R: Rng>(rng: &mut R, (lo, hi): (Decimal, Decimal), dp: u32) -> Decimal {
    let scale = Decimal::from(10u64.pow(dp));
    let (a, b) = ((lo * scale).ceil(), (hi * scale).floor());
    let (a, b) = (a.to_i64().unwrap_or(0), b.to_i64().unwrap_or(0).max(a.to_i64().unwrap_or(0)));
    Decimal::new(rng.random_range(a..=b), dp)
}

impl PricingPolicy {
    /// Largest over smallest region multiplier.
    pub fn injected_ratio(&self) -> Decimal {
        let ms = self.region_rules.values().map(|r| r.multiplier);
        let max = ms.clone().max().unwrap_or(Decimal::ONE);
        let min = ms.min().unwrap_or(Decimal::ONE);
        max / min
    }
}
