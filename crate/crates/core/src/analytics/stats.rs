use std::collections::BTreeMap;

use rust_decimal::Decimal;
use serde::{Deserialize, Serialize};

use super::ProductProfile;

/// Five-number summary of a ratio sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RatioStats {
    #[serde(with = "rust_decimal::serde::str")]
    pub min: Decimal,
    #[serde(with = "rust_decimal::serde::str")]
    pub q25: Decimal,
    #[serde(with = "rust_decimal::serde::str")]
    pub median: Decimal,
    #[serde(with = "rust_decimal::serde::str")]
    pub q75: Decimal,
    #[serde(with = "rust_decimal::serde::str")]
    pub max: Decimal,
}

/// `p`-quantile by linear interpolation between closest ranks: position
/// `h = p·(n−1)` in sorted order, `x[⌊h⌋] + (h−⌊h⌋)·(x[⌊h⌋+1] − x[⌊h⌋])`.
///
/// Reorders `values` (selection, not a full sort). `None` on empty input.
pub fn quantile(values: &mut [Decimal], p: Decimal) -> Option<Decimal> {
    let n = values.len();
    if n == 0 {
        return None;
    }
    let h = p * Decimal::from(n - 1);
    let lo = h.floor();
    let k = usize::try_from(lo.mantissa() / 10i128.pow(lo.scale())).ok()?.min(n - 1);
    let frac = h - lo;
    let (_, x_k, right) = values.select_nth_unstable(k);
    let x_k = *x_k;
    if frac.is_zero() || right.is_empty() {
        return Some(x_k);
    }
    let x_next = *right.iter().min().expect("non-empty");
    Some(x_k + frac * (x_next - x_k))
}

impl RatioStats {
    pub fn of(values: &[Decimal]) -> Option<RatioStats> {
        let mut v = values.to_vec();
        let q = |v: &mut Vec<Decimal>, p: Decimal| quantile(v, p);
        Some(RatioStats {
            q25: q(&mut v, Decimal::new(25, 2))?,
            median: q(&mut v, Decimal::new(5, 1))?,
            q75: q(&mut v, Decimal::new(75, 2))?,
            min: *values.iter().min()?,
            max: *values.iter().max()?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetailerSummary {
    pub domain: String,
    /// Product-wave profiles aggregated.
    pub n_products: usize,
    pub variation_extent: f64,
    pub ratio_stats: RatioStats,
}

/// Summary over one retailer's profiles; `None` without profiles.
pub fn retailer_summary(domain: &str, profiles: &[ProductProfile]) -> Option<RetailerSummary> {
    let ratios: Vec<Decimal> = profiles.iter().map(|p| p.max_min_ratio).collect();
    let ratio_stats = RatioStats::of(&ratios)?;
    let passed = profiles.iter().filter(|p| p.gate.passed).count();
    Some(RetailerSummary {
        domain: domain.to_string(),
        n_products: profiles.len(),
        variation_extent: passed as f64 / profiles.len() as f64,
        ratio_stats,
    })
}

/// Profiles grouped by retailer domain.
pub fn by_domain(profiles: &[ProductProfile]) -> BTreeMap<String, Vec<ProductProfile>> {
    let mut out: BTreeMap<String, Vec<ProductProfile>> = BTreeMap::new();
    for p in profiles {
        out.entry(p.domain().unwrap_or_default()).or_default().push(p.clone());
    }
    out
}

pub fn summarize_all(profiles: &[ProductProfile]) -> Vec<RetailerSummary> {
    by_domain(profiles)
        .iter()
        .filter_map(|(d, ps)| retailer_summary(d, ps))
        .collect()
}

/// One product-wave: cheapest price (reference midpoint) against its ratio.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RatioPoint {
    pub product_uri: String,
    pub wave_id: String,
    #[serde(with = "rust_decimal::serde::str")]
    pub min_price: Decimal,
    #[serde(with = "rust_decimal::serde::str")]
    pub ratio: Decimal,
}

pub fn ratio_vs_price(profiles: &[ProductProfile]) -> Vec<RatioPoint> {
    profiles
        .iter()
        .map(|p| RatioPoint {
            product_uri: p.product_uri.clone(),
            wave_id: p.wave_id.clone(),
            min_price: p.min_price.midpoint(),
            ratio: p.max_min_ratio,
        })
        .collect()
}

/// Ratio statistics of points whose min price falls in `[lo, hi)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriceBand {
    #[serde(with = "rust_decimal::serde::str")]
    pub lo: Decimal,
    #[serde(with = "rust_decimal::serde::str_option")]
    pub hi: Option<Decimal>,
    pub count: usize,
    pub stats: Option<RatioStats>,
}

/// Decade bands `[1,10), [10,100), …, [10000, ∞)` in reference units.
pub fn default_band_edges() -> Vec<Decimal> {
    [0u64, 10, 100, 1_000, 10_000].into_iter().map(Decimal::from).collect()
}

/// Bands with lower edges `edges` (ascending); the last band is open-ended.
pub fn band_report(points: &[RatioPoint], edges: &[Decimal]) -> Vec<PriceBand> {
    edges
        .iter()
        .enumerate()
        .map(|(i, lo)| {
            let hi = edges.get(i + 1).copied();
            let ratios: Vec<Decimal> = points
                .iter()
                .filter(|p| p.min_price >= *lo && hi.is_none_or(|h| p.min_price < h))
                .map(|p| p.ratio)
                .collect();
            PriceBand {
                lo: *lo,
                hi,
                count: ratios.len(),
                stats: RatioStats::of(&ratios),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rust_decimal_macros::dec;

    #[test]
    fn quartiles_of_four() {
        let s = RatioStats::of(&[dec!(1.3), dec!(1.1), dec!(1.4), dec!(1.2)]).unwrap();
        assert_eq!((s.q25, s.median, s.q75), (dec!(1.175), dec!(1.25), dec!(1.325)));
        assert_eq!((s.min, s.max), (dec!(1.1), dec!(1.4)));
    }

    #[test]
    fn degenerate_samples() {
        let s = RatioStats::of(&[Decimal::ONE; 3]).unwrap();
        assert_eq!(s.median, Decimal::ONE);
        assert_eq!(RatioStats::of(&[dec!(2)]).unwrap().q75, dec!(2));
        assert!(RatioStats::of(&[]).is_none());
    }

    #[test]
    fn bands() {
        let pt = |p: Decimal, r: Decimal| RatioPoint {
            product_uri: String::new(),
            wave_id: String::new(),
            min_price: p,
            ratio: r,
        };
        let pts = [pt(dec!(5), dec!(3)), pt(dec!(50), dec!(1.2)), pt(dec!(20000), dec!(1.4))];
        let bands = band_report(&pts, &default_band_edges());
        assert_eq!(bands.len(), 5);
        assert_eq!(bands[0].stats.unwrap().max, dec!(3));
        assert_eq!(bands[2].count, 0);
        assert_eq!(bands[4].stats.unwrap().max, dec!(1.4));
    }
}
