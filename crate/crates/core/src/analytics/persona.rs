use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::AnalyticsError;
use crate::extract::{canonical_format, PriceSelector};
use crate::money::Money;
use crate::vantage::{FetchSlot, PersonaProfile, Pipeline, PriceObservation, VantageError, WaveSpec};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PersonaPrice {
    pub persona: String,
    pub price: Option<Money>,
    /// Canonical price text; absent on failure.
    pub canonical: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
}

/// Prices of one product seen by several personas at one vantage and time.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PersonaComparison {
    pub product_uri: String,
    pub vantage: String,
    pub wave_id: String,
    pub prices: Vec<PersonaPrice>,
    pub differs: bool,
    /// Personas grouped by identical price, cheapest group first.
    pub groups: Vec<Vec<String>>,
    /// Profile fields constant within every price group but differing
    /// between groups, e.g. `cookie:tier` or `header:user-agent`.
    pub attributed_to: Vec<String>,
}

/// Request-shaping fields of a profile as `field -> value`.
fn profile_fields(p: &PersonaProfile) -> BTreeMap<String, String> {
    let mut out = BTreeMap::new();
    for (k, v) in &p.headers {
        out.insert(format!("header:{}", k.to_ascii_lowercase()), v.clone());
    }
    for (k, v) in &p.cookies {
        out.insert(format!("cookie:{k}"), v.clone());
    }
    if let Some(u) = &p.logged_in_as {
        out.insert("logged_in_as".into(), u.clone());
    }
    out
}

fn attribute(groups: &[Vec<String>], personas: &BTreeMap<&str, &PersonaProfile>) -> Vec<String> {
    if groups.len() < 2 {
        return Vec::new();
    }
    let fields: BTreeMap<&str, BTreeMap<String, String>> =
        personas.iter().map(|(n, p)| (*n, profile_fields(p))).collect();
    let all: BTreeSet<&String> = fields.values().flat_map(|f| f.keys()).collect();
    let value = |persona: &str, field: &str| fields.get(persona).and_then(|f| f.get(field)).cloned();
    let mut consistent = Vec::new();
    let mut varying = Vec::new();
    for field in all {
        let per_group: Vec<BTreeSet<Option<String>>> = groups
            .iter()
            .map(|g| g.iter().map(|p| value(p, field)).collect())
            .collect();
        let distinct: BTreeSet<&BTreeSet<Option<String>>> = per_group.iter().collect();
        if distinct.len() < 2 {
            continue;
        }
        varying.push(field.clone());
        let constant_within = per_group.iter().all(|s| s.len() == 1);
        let pairwise_distinct = distinct.len() == per_group.len();
        if constant_within && pairwise_distinct {
            consistent.push(field.clone());
        }
    }
    if consistent.is_empty() {
        varying
    } else {
        consistent
    }
}

/// Compares persona observations of one product at one vantage in one wave.
/// Personas without an observation are reported with `failures`' reason.
pub fn persona_compare(
    personas: &[PersonaProfile],
    observations: &[PriceObservation],
    failures: &BTreeMap<String, String>,
) -> Result<PersonaComparison, AnalyticsError> {
    let first = observations
        .first()
        .ok_or(AnalyticsError::QuorumFailure { ok: 0, needed: 2 })?;
    if observations
        .iter()
        .any(|o| o.vantage != first.vantage || o.wave_id != first.wave_id || o.product_uri != first.product_uri)
    {
        return Err(AnalyticsError::MixedInput("persona comparison needs one vantage, wave and product".into()));
    }
    let mut by_persona: BTreeMap<&str, Money> = BTreeMap::new();
    for o in observations {
        if let Some(p) = &o.profile {
            // lowest repetition wins; observations arrive in replay order
            by_persona.entry(p.as_str()).or_insert(o.money);
        }
    }
    if by_persona.len() < 2 {
        return Err(AnalyticsError::QuorumFailure {
            ok: by_persona.len(),
            needed: 2,
        });
    }
    let prices: Vec<PersonaPrice> = personas
        .iter()
        .map(|p| {
            let price = by_persona.get(p.name.as_str()).copied();
            PersonaPrice {
                persona: p.name.clone(),
                canonical: price.as_ref().map(canonical_format),
                failure: match price {
                    Some(_) => None,
                    None => Some(failures.get(&p.name).cloned().unwrap_or_else(|| "no observation".into())),
                },
                price,
            }
        })
        .collect();
    let mut grouped: BTreeMap<(String, rust_decimal::Decimal), Vec<String>> = BTreeMap::new();
    for (name, m) in &by_persona {
        grouped
            .entry((m.currency().to_string(), m.amount()))
            .or_default()
            .push(name.to_string());
    }
    let mut groups: Vec<((String, rust_decimal::Decimal), Vec<String>)> = grouped.into_iter().collect();
    groups.sort_by(|a, b| a.0 .1.cmp(&b.0 .1).then(a.0 .0.cmp(&b.0 .0)));
    let groups: Vec<Vec<String>> = groups.into_iter().map(|(_, g)| g).collect();
    let known: BTreeMap<&str, &PersonaProfile> = personas
        .iter()
        .filter(|p| by_persona.contains_key(p.name.as_str()))
        .map(|p| (p.name.as_str(), p))
        .collect();
    Ok(PersonaComparison {
        product_uri: first.product_uri.clone(),
        vantage: first.vantage.clone(),
        wave_id: first.wave_id.clone(),
        prices,
        differs: groups.len() > 1,
        attributed_to: attribute(&groups, &known),
        groups,
    })
}

/// Fetches `uri` once per persona from one vantage, synchronized as one
/// round, stores the observations and compares them.
pub async fn persona_check(
    pipeline: &Pipeline,
    check_id: &str,
    uri: &str,
    selector: &PriceSelector,
    vantage: &str,
    personas: &[PersonaProfile],
) -> Result<PersonaComparison, AnalyticsError> {
    let names: BTreeSet<&str> = personas.iter().map(|p| p.name.as_str()).collect();
    if names.len() != personas.len() {
        return Err(AnalyticsError::MixedInput("persona names must be unique".into()));
    }
    for p in personas {
        p.validate().map_err(|e| AnalyticsError::MixedInput(e.to_string()))?;
    }
    let spec = WaveSpec {
        check_id: check_id.to_string(),
        wave_id: check_id.to_string(),
        repetition: 0,
        uri: uri.to_string(),
        selector: selector.clone(),
        slots: personas
            .iter()
            .map(|p| FetchSlot {
                vantage: vantage.to_string(),
                profile: Some(p.clone()),
            })
            .collect(),
    };
    let outcome = match pipeline.run_wave(&spec, &Default::default()).await {
        Ok(o) => o,
        Err(VantageError::QuorumFailure { ok, .. }) => return Err(AnalyticsError::QuorumFailure { ok, needed: 2 }),
        Err(e) => return Err(AnalyticsError::Vantage(e.to_string())),
    };
    let failures = outcome
        .failures
        .iter()
        .filter_map(|f| f.profile.clone().map(|p| (p, f.reason.clone())))
        .collect();
    persona_compare(personas, &outcome.observations, &failures)
}
