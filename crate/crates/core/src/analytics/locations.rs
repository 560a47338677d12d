use std::collections::{BTreeMap, BTreeSet};

use rust_decimal::Decimal;
use serde::{Deserialize, Serialize};

use super::{AnalyticsError, ProductProfile, RatioStats};
use crate::fx::RefInterval;

/// Price of one product at one location relative to its cheapest location.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LocationRatio {
    pub product_uri: String,
    pub wave_id: String,
    pub location: String,
    #[serde(with = "rust_decimal::serde::str")]
    pub rho: Decimal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocationReport {
    pub ratios: Vec<LocationRatio>,
    pub per_location: BTreeMap<String, RatioStats>,
    /// Per domain, locations with `rho > 1` on every product seen there.
    pub never_cheapest: BTreeMap<String, Vec<String>>,
}

/// Pessimistic `lo(v) / hi(min)`; 1 where `v` overlaps the minimum.
fn rho(v: &RefInterval, min: &RefInterval) -> Decimal {
    if min.strictly_below(v) {
        v.midpoint() / min.midpoint()
    } else {
        Decimal::ONE
    }
}

/// Per-location ratios of one profile, using observations without a persona.
pub fn profile_rhos(p: &ProductProfile) -> Vec<(String, Decimal)> {
    let plain: Vec<(&str, &RefInterval)> = p
        .observations
        .iter()
        .zip(&p.intervals)
        .filter(|(o, _)| o.profile.is_none())
        .map(|(o, i)| (o.vantage.as_str(), i))
        .collect();
    let Some(min) = plain.iter().map(|(_, i)| *i).min_by_key(|i| i.midpoint()) else {
        return Vec::new();
    };
    plain.iter().map(|(v, i)| (v.to_string(), rho(i, min))).collect()
}

pub fn location_ratios(profiles: &[ProductProfile]) -> LocationReport {
    let mut ratios = Vec::new();
    let mut by_location: BTreeMap<String, Vec<Decimal>> = BTreeMap::new();
    // domain -> location -> (products seen, products where cheapest-or-tied)
    let mut seen: BTreeMap<String, BTreeMap<String, (usize, usize)>> = BTreeMap::new();
    for p in profiles {
        let domain = p.domain().unwrap_or_default();
        for (loc, r) in profile_rhos(p) {
            by_location.entry(loc.clone()).or_default().push(r);
            let e = seen.entry(domain.clone()).or_default().entry(loc.clone()).or_default();
            e.0 += 1;
            if r == Decimal::ONE {
                e.1 += 1;
            }
            ratios.push(LocationRatio {
                product_uri: p.product_uri.clone(),
                wave_id: p.wave_id.clone(),
                location: loc,
                rho: r,
            });
        }
    }
    let per_location = by_location
        .into_iter()
        .filter_map(|(l, v)| RatioStats::of(&v).map(|s| (l, s)))
        .collect();
    let never_cheapest = seen
        .into_iter()
        .map(|(d, locs)| {
            let flagged = locs
                .into_iter()
                .filter(|(_, (n, cheapest))| *n > 0 && *cheapest == 0)
                .map(|(l, _)| l)
                .collect();
            (d, flagged)
        })
        .collect();
    LocationReport {
        ratios,
        per_location,
        never_cheapest,
    }
}

/// Pairwise comparison of locations for one domain.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairwiseGrid {
    pub domain: String,
    pub locations: Vec<String>,
    /// `cells[i][j]`: `(rho_j, rho_i)` per product-wave seen at both; empty on the diagonal.
    pub cells: Vec<Vec<Vec<(Decimal, Decimal)>>>,
}

impl PairwiseGrid {
    pub fn cell(&self, row: &str, col: &str) -> Option<&[(Decimal, Decimal)]> {
        let i = self.locations.iter().position(|l| l == row)?;
        let j = self.locations.iter().position(|l| l == col)?;
        Some(&self.cells[i][j])
    }
}

/// Grid over `locations` (all plain-profile locations of the domain when empty).
pub fn pairwise_grid(domain: &str, profiles: &[ProductProfile], locations: &[String]) -> Result<PairwiseGrid, AnalyticsError> {
    let rows: Vec<BTreeMap<String, Decimal>> = profiles
        .iter()
        .filter(|p| p.domain().as_deref() == Some(domain))
        .map(|p| profile_rhos(p).into_iter().collect())
        .collect();
    let locations: Vec<String> = if locations.is_empty() {
        rows.iter()
            .flat_map(|r| r.keys().cloned())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect()
    } else {
        locations.to_vec()
    };
    if locations.len() < 2 {
        return Err(AnalyticsError::InsufficientLocations(locations.len()));
    }
    let k = locations.len();
    let mut cells = vec![vec![Vec::new(); k]; k];
    for r in &rows {
        for (i, li) in locations.iter().enumerate() {
            for (j, lj) in locations.iter().enumerate() {
                if i == j {
                    continue;
                }
                if let (Some(ri), Some(rj)) = (r.get(li), r.get(lj)) {
                    cells[i][j].push((*rj, *ri));
                }
            }
        }
    }
    Ok(PairwiseGrid {
        domain: domain.to_string(),
        locations,
        cells,
    })
}
