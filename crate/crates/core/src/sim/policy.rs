use std::collections::{BTreeMap, HashMap};
use std::net::IpAddr;

use chrono::NaiveDate;
use ipnet::IpNet;
use rand::Rng;
use rust_decimal::Decimal;
use serde::{Deserialize, Serialize};

use super::SimError;
use crate::fx::{RateTable, RateWindow};
use crate::money::{Currency, Money};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TemplateId {
    #[default]
    Classic,
    Grid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CatalogItem {
    pub id: String,
    #[serde(default)]
    pub name: String,
    #[serde(with = "rust_decimal::serde::str")]
    pub base: Decimal,
    pub currency: Currency,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionRule {
    #[serde(with = "rust_decimal::serde::str")]
    pub multiplier: Decimal,
    /// Added after the multiplier, in the item's base currency.
    #[serde(default, with = "rust_decimal::serde::str")]
    pub surcharge: Decimal,
    pub display_currency: Currency,
    /// Page language; decides number formatting.
    pub locale: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Predicate {
    Cookie { name: String, value: String },
    Header { name: String, value: String },
}

/// Multiplies the base price when its predicate matches the request.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PersonaRule {
    pub when: Predicate,
    #[serde(with = "rust_decimal::serde::str")]
    pub factor: Decimal,
}

/// Randomized price experiment: a session lands in a treated arm with
/// probability `p`, which moves its prices by `±amplitude`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AbNoise {
    pub p: f64,
    #[serde(with = "rust_decimal::serde::str")]
    pub amplitude: Decimal,
}

impl Default for AbNoise {
    fn default() -> Self {
        AbNoise {
            p: 0.0,
            amplitude: Decimal::ZERO,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AbArm {
    Control,
    Up,
    Down,
}

impl AbArm {
    pub fn draw<R: Rng>(noise: &AbNoise, rng: &mut R) -> AbArm {
        if noise.p <= 0.0 || !rng.random_bool(noise.p.min(1.0)) {
            return AbArm::Control;
        }
        if rng.random_bool(0.5) {
            AbArm::Up
        } else {
            AbArm::Down
        }
    }

    fn factor(self, noise: &AbNoise) -> Decimal {
        match self {
            AbArm::Control => Decimal::ONE,
            AbArm::Up => Decimal::ONE + noise.amplitude,
            AbArm::Down => Decimal::ONE - noise.amplitude,
        }
    }
}

/// Address block mapped to a region.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AddressBlock {
    pub net: IpNet,
    pub region: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PricingPolicy {
    pub domain: String,
    #[serde(default)]
    pub template: TemplateId,
    pub catalog: Vec<CatalogItem>,
    pub region_rules: BTreeMap<String, RegionRule>,
    #[serde(default)]
    pub persona_rules: Vec<PersonaRule>,
    #[serde(default)]
    pub ab_noise: AbNoise,
    #[serde(default)]
    pub address_blocks: Vec<AddressBlock>,
    /// Region for requests matching no header or block.
    #[serde(default)]
    pub default_region: Option<String>,
    /// External hosts the pages embed (analytics, ads).
    #[serde(default)]
    pub third_parties: Vec<String>,
    #[serde(default)]
    pub seed: u64,
}

impl PricingPolicy {
    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: String| Err(SimError::InvalidPolicy(format!("{}: {m}", self.domain)));
        if self.domain.trim().is_empty() {
            return bad("empty domain".into());
        }
        if !(0.0..=1.0).contains(&self.ab_noise.p) || self.ab_noise.amplitude < Decimal::ZERO {
            return bad("A/B noise needs 0 ≤ p ≤ 1 and amplitude ≥ 0".into());
        }
        if self.ab_noise.amplitude >= Decimal::ONE {
            return bad("A/B amplitude must stay below 1".into());
        }
        for (name, r) in &self.region_rules {
            if r.multiplier <= Decimal::ZERO {
                return bad(format!("region {name} multiplier must be positive"));
            }
        }
        for rule in &self.persona_rules {
            if rule.factor <= Decimal::ZERO {
                return bad("persona factor must be positive".into());
            }
        }
        let mut ids = std::collections::HashSet::new();
        for item in &self.catalog {
            if item.base <= Decimal::ZERO {
                return bad(format!("product {} has a non-positive base price", item.id));
            }
            if !ids.insert(&item.id) {
                return bad(format!("duplicate product {}", item.id));
            }
        }
        if let Some(d) = &self.default_region {
            if !self.region_rules.contains_key(d) {
                return bad(format!("default region {d} has no rule"));
            }
        }
        Ok(())
    }

    pub fn item(&self, id: &str) -> Option<&CatalogItem> {
        self.catalog.iter().find(|i| i.id == id)
    }

    /// Region from the test header, else the source address, else the default.
    pub fn resolve_region(&self, header: Option<&str>, addr: Option<IpAddr>) -> Option<String> {
        if let Some(h) = header.map(str::trim).filter(|h| !h.is_empty()) {
            return Some(h.to_string());
        }
        if let Some(ip) = addr {
            if let Some(b) = self.address_blocks.iter().find(|b| b.net.contains(&ip)) {
                return Some(b.region.clone());
            }
        }
        self.default_region.clone()
    }
}

/// Request attributes persona rules can key on.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RequestProfile {
    pub cookies: Vec<(String, String)>,
    pub headers: Vec<(String, String)>,
}

impl RequestProfile {
    pub fn with_cookie(mut self, name: &str, value: &str) -> Self {
        self.cookies.push((name.to_string(), value.to_string()));
        self
    }

    pub fn with_header(mut self, name: &str, value: &str) -> Self {
        self.headers.push((name.to_string(), value.to_string()));
        self
    }

    /// Parses a `Cookie` header value.
    pub fn parse_cookies(header: &str) -> Vec<(String, String)> {
        header
            .split(';')
            .filter_map(|kv| {
                let (k, v) = kv.split_once('=')?;
                Some((k.trim().to_string(), v.trim().to_string()))
            })
            .collect()
    }

    fn matches(&self, p: &Predicate) -> bool {
        match p {
            Predicate::Cookie { name, value } => self.cookies.iter().any(|(k, v)| k == name && v == value),
            Predicate::Header { name, value } => self
                .headers
                .iter()
                .any(|(k, v)| k.eq_ignore_ascii_case(name) && v == value),
        }
    }
}

/// Fixed simulator exchange rates: units of each currency per USD, and the
/// daily window published around them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimRates {
    pub per_usd: BTreeMap<Currency, Decimal>,
    /// Relative half-width of the published windows.
    pub half_width: Decimal,
}

impl Default for SimRates {
    fn default() -> Self {
        use rust_decimal_macros::dec;
        SimRates {
            per_usd: BTreeMap::from([
                (Currency::EUR, dec!(0.77)),
                (Currency::GBP, dec!(0.64)),
                (Currency::new("BRL").expect("code"), dec!(1.98)),
                (Currency::new("CAD").expect("code"), dec!(1.01)),
                (Currency::new("SEK").expect("code"), dec!(6.42)),
                (Currency::new("CHF").expect("code"), dec!(0.92)),
                (Currency::new("PLN").expect("code"), dec!(3.12)),
            ]),
            half_width: dec!(0.0002),
        }
    }
}

impl SimRates {
    /// `from`→`to` conversion factor the simulator applies.
    pub fn factor(&self, from: Currency, to: Currency) -> Result<Decimal, SimError> {
        let per = |c: Currency| -> Result<Decimal, SimError> {
            if c == Currency::USD {
                Ok(Decimal::ONE)
            } else {
                self.per_usd.get(&c).copied().ok_or(SimError::UnknownCurrency(c))
            }
        };
        Ok(per(to)? / per(from)?)
    }

    /// USD→X windows for `date`, bracketing every simulator rate.
    pub fn windows(&self, date: NaiveDate) -> Vec<RateWindow> {
        self.per_usd
            .iter()
            .map(|(c, mid)| {
                RateWindow::new(
                    date,
                    Currency::USD,
                    *c,
                    *mid * (Decimal::ONE - self.half_width),
                    *mid * (Decimal::ONE + self.half_width),
                )
                .expect("positive window")
            })
            .collect()
    }

    /// Rate table (reference USD) covering `from..=to`.
    pub fn table(&self, from: NaiveDate, to: NaiveDate) -> RateTable {
        let records = from.iter_days().take_while(|d| *d <= to).flat_map(|d| self.windows(d));
        RateTable::load(records, Currency::USD).expect("simulator windows load")
    }
}

/// Ground-truth price of `product` for a request from `region`.
///
/// The persona factor applies to the base price first; then the region's
/// multiplier and surcharge; then conversion at the simulator rate; then the
/// A/B arm. The result is rounded to cents.
pub fn price_for_arm(
    policy: &PricingPolicy,
    rates: &SimRates,
    product: &str,
    region: &str,
    request: &RequestProfile,
    arm: AbArm,
) -> Result<Money, SimError> {
    let item = policy.item(product).ok_or_else(|| SimError::UnknownProduct(product.to_string()))?;
    let rule = policy
        .region_rules
        .get(region)
        .ok_or_else(|| SimError::UnknownRegion(region.to_string()))?;
    let persona = policy
        .persona_rules
        .iter()
        .find(|r| request.matches(&r.when))
        .map_or(Decimal::ONE, |r| r.factor);
    let local = (item.base * persona) * rule.multiplier + rule.surcharge;
    let shown = local * rates.factor(item.currency, rule.display_currency)? * arm.factor(&policy.ab_noise);
    Money::rounded(shown, rule.display_currency).map_err(|e| SimError::InvalidPolicy(e.to_string()))
}

/// [`price_for_arm`] with the A/B arm drawn from `rng`.
pub fn price_for<R: Rng>(
    policy: &PricingPolicy,
    rates: &SimRates,
    product: &str,
    region: &str,
    request: &RequestProfile,
    rng: &mut R,
) -> Result<Money, SimError> {
    let arm = AbArm::draw(&policy.ab_noise, rng);
    price_for_arm(policy, rates, product, region, request, arm)
}

/// Cache of A/B arms per session id.
pub type ArmTable = HashMap<String, AbArm>;

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rust_decimal_macros::dec;

    fn policy() -> PricingPolicy {
        PricingPolicy {
            domain: "simshop-0.test".into(),
            template: TemplateId::Classic,
            catalog: vec![
                CatalogItem {
                    id: "1".into(),
                    name: "Kettle".into(),
                    base: dec!(100),
                    currency: Currency::USD,
                },
                CatalogItem {
                    id: "2".into(),
                    name: "Lamp".into(),
                    base: dec!(40),
                    currency: Currency::USD,
                },
            ],
            region_rules: BTreeMap::from([
                (
                    "US".into(),
                    RegionRule {
                        multiplier: dec!(1),
                        surcharge: dec!(0),
                        display_currency: Currency::USD,
                        locale: "en-US".into(),
                    },
                ),
                (
                    "FI".into(),
                    RegionRule {
                        multiplier: dec!(1.3),
                        surcharge: dec!(0),
                        display_currency: Currency::EUR,
                        locale: "fi-FI".into(),
                    },
                ),
            ]),
            persona_rules: vec![PersonaRule {
                when: Predicate::Cookie {
                    name: "tier".into(),
                    value: "affluent".into(),
                },
                factor: dec!(1.5),
            }],
            ab_noise: AbNoise::default(),
            address_blocks: vec![AddressBlock {
                net: "10.9.0.0/16".parse().unwrap(),
                region: "FI".into(),
            }],
            default_region: Some("US".into()),
            third_parties: vec![],
            seed: 7,
        }
    }

    fn price(product: &str, region: &str, req: &RequestProfile) -> Result<Money, SimError> {
        price_for_arm(&policy(), &SimRates::default(), product, region, req, AbArm::Control)
    }

    #[test]
    fn regional_conversion() {
        let m = price("1", "FI", &RequestProfile::default()).unwrap();
        assert_eq!(m, Money::new(dec!(100.10), Currency::EUR).unwrap());
    }

    #[test]
    fn identity_policy() {
        assert_eq!(
            price("1", "US", &RequestProfile::default()).unwrap(),
            Money::new(dec!(100), Currency::USD).unwrap()
        );
    }

    #[test]
    fn persona_override() {
        let req = RequestProfile::default().with_cookie("tier", "affluent");
        assert_eq!(price("2", "US", &req).unwrap(), Money::new(dec!(60), Currency::USD).unwrap());
    }

    #[test]
    fn lookup_errors() {
        assert!(matches!(
            price("9", "US", &RequestProfile::default()),
            Err(SimError::UnknownProduct(_))
        ));
        assert!(matches!(
            price("1", "BR", &RequestProfile::default()),
            Err(SimError::UnknownRegion(_))
        ));
    }

    #[test]
    fn region_resolution_order() {
        let p = policy();
        let fi_addr: IpAddr = "10.9.3.4".parse().unwrap();
        assert_eq!(p.resolve_region(Some("US"), Some(fi_addr)).as_deref(), Some("US"));
        assert_eq!(p.resolve_region(None, Some(fi_addr)).as_deref(), Some("FI"));
        assert_eq!(p.resolve_region(None, Some("127.0.0.1".parse().unwrap())).as_deref(), Some("US"));
    }

    #[test]
    fn ab_arms() {
        let mut p = policy();
        p.ab_noise = AbNoise {
            p: 1.0,
            amplitude: dec!(0.05),
        };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let m = price_for(&p, &SimRates::default(), "1", "US", &RequestProfile::default(), &mut rng).unwrap();
        assert!(m.amount() == dec!(105) || m.amount() == dec!(95));
    }

    #[test]
    fn windows_bracket_rates() {
        let rates = SimRates::default();
        let day = NaiveDate::from_ymd_opt(2013, 2, 1).unwrap();
        for w in rates.windows(day) {
            assert!(w.contains(rates.per_usd[&w.quote]));
        }
        let t = rates.table(day, day);
        assert!(t.lookup(Currency::EUR, day).is_some());
    }

    #[test]
    fn validation() {
        let mut p = policy();
        p.region_rules.get_mut("FI").unwrap().multiplier = dec!(0);
        assert!(p.validate().is_err());
        let mut p = policy();
        p.ab_noise.p = 1.5;
        assert!(p.validate().is_err());
        assert!(policy().validate().is_ok());
    }
}
