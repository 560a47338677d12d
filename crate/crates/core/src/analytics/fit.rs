use rust_decimal::prelude::ToPrimitive;
use rust_decimal::Decimal;
use rust_decimal_macros::dec;
use serde::{Deserialize, Serialize};

use std::collections::BTreeMap;

use super::{AnalyticsError, ProductProfile};

/// Smallest accepted `p_min`; keeps `1/p` sums far from overflow.
pub const MIN_FIT_PRICE: Decimal = dec!(0.0001);
pub const MIN_FIT_PAIRS: usize = 5;

const A_TOLERANCE: Decimal = dec!(0.01);
const B_THRESHOLD: Decimal = dec!(0.5);
/// Reported coefficients are rounded to this many places, which hides
/// division residue in the last of the 28 digits.
const FIT_DIGITS: u32 = 18;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VariationClass {
    Multiplicative,
    Additive,
    Mixed,
    Flat,
}

/// `p_loc ≈ a·p_min + b` for one (domain, location).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariationModel {
    pub domain: String,
    pub location: String,
    #[serde(with = "rust_decimal::serde::str")]
    pub a: Decimal,
    #[serde(with = "rust_decimal::serde::str")]
    pub b: Decimal,
    /// RMS of `(â·p_min + b̂ − p_loc) / p_loc`.
    pub residual: f64,
    pub class: VariationClass,
    pub n_pairs: usize,
    /// All `p_min` equal: `a` and `b` cannot be separated.
    pub degenerate: bool,
}

pub fn classify(a: Decimal, b: Decimal) -> VariationClass {
    let a_is_one = (a - Decimal::ONE).abs() < A_TOLERANCE;
    let b_small = b.abs() < B_THRESHOLD;
    match (a_is_one, b_small) {
        (true, true) => VariationClass::Flat,
        (true, false) => VariationClass::Additive,
        (false, true) if (a - Decimal::ONE).abs() > A_TOLERANCE => VariationClass::Multiplicative,
        _ => VariationClass::Mixed,
    }
}

/// Fits `p_loc = a·p_min + b` over `(p_min, p_loc)` pairs.
///
/// Least squares on the ratio form `p_loc/p_min = a + b·(1/p_min)`, i.e. each
/// pair weighted by `1/p_min²`. On exact data this recovers the same line as
/// plain least squares; with multiplicative noise it keeps cheap products
/// from being drowned out by expensive ones, which is where `b` shows.
/// Arithmetic is decimal throughout, so exact inputs give exact `(a, b)` up
/// to 28 significant digits.
pub fn fit_variation_model(
    domain: &str,
    location: &str,
    pairs: &[(Decimal, Decimal)],
) -> Result<VariationModel, AnalyticsError> {
    if pairs.len() < MIN_FIT_PAIRS {
        return Err(AnalyticsError::InsufficientPairs(pairs.len()));
    }
    if let Some((p, q)) = pairs.iter().find(|(p, q)| *p < MIN_FIT_PRICE || *q <= Decimal::ZERO) {
        return Err(AnalyticsError::NonPositivePrice(format!("({p}, {q})")));
    }
    let n = Decimal::from(pairs.len());
    let xs: Vec<Decimal> = pairs.iter().map(|(p, _)| Decimal::ONE / p).collect();
    let ys: Vec<Decimal> = pairs.iter().map(|(p, q)| q / p).collect();
    let x_mean = xs.iter().sum::<Decimal>() / n;
    let y_mean = ys.iter().sum::<Decimal>() / n;
    let sxx: Decimal = xs.iter().map(|x| (x - x_mean) * (x - x_mean)).sum();
    let sxy: Decimal = xs.iter().zip(&ys).map(|(x, y)| (x - x_mean) * (y - y_mean)).sum();
    let degenerate = sxx.is_zero();
    let (a, b) = if degenerate {
        (y_mean, Decimal::ZERO)
    } else {
        let b = sxy / sxx;
        (y_mean - b * x_mean, b)
    };
    let (a, b) = (a.round_dp(FIT_DIGITS).normalize(), b.round_dp(FIT_DIGITS).normalize());
    let sq: f64 = pairs
        .iter()
        .map(|(p, q)| {
            let rel = ((a * p + b - q) / q).to_f64().unwrap_or(f64::INFINITY);
            rel * rel
        })
        .sum();
    let residual = (sq / pairs.len() as f64).sqrt();
    Ok(VariationModel {
        domain: domain.to_string(),
        location: location.to_string(),
        a,
        b,
        residual,
        class: if degenerate { VariationClass::Mixed } else { classify(a, b) },
        n_pairs: pairs.len(),
        degenerate,
    })
}

/// `(p_min, p_loc)` reference midpoints per location over one domain's
/// profiles, plain-profile observations only.
pub fn location_pairs(domain: &str, profiles: &[ProductProfile]) -> BTreeMap<String, Vec<(Decimal, Decimal)>> {
    let mut out: BTreeMap<String, Vec<(Decimal, Decimal)>> = BTreeMap::new();
    for p in profiles.iter().filter(|p| p.domain().as_deref() == Some(domain)) {
        let plain = p.observations.iter().zip(&p.intervals).filter(|(o, _)| o.profile.is_none());
        let Some(p_min) = plain.clone().map(|(_, i)| i.midpoint()).min() else {
            continue;
        };
        for (o, i) in plain {
            out.entry(o.vantage.clone()).or_default().push((p_min, i.midpoint()));
        }
    }
    out
}

/// One fit per location of `domain`; locations that cannot be fitted carry the error.
pub fn fit_domain(
    domain: &str,
    profiles: &[ProductProfile],
) -> Vec<(String, Result<VariationModel, AnalyticsError>)> {
    location_pairs(domain, profiles)
        .into_iter()
        .map(|(loc, pairs)| {
            let fit = fit_variation_model(domain, &loc, &pairs);
            (loc, fit)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pairs(f: impl Fn(Decimal) -> Decimal) -> Vec<(Decimal, Decimal)> {
        [dec!(3.5), dec!(12), dec!(40.25), dec!(99.99), dec!(250), dec!(1200)]
            .into_iter()
            .map(|p| (p, f(p)))
            .collect()
    }

    #[test]
    fn pure_multiplicative() {
        let m = fit_variation_model("d", "l", &pairs(|p| p * dec!(1.15))).unwrap();
        assert_eq!((m.a, m.b, m.class), (dec!(1.15), dec!(0), VariationClass::Multiplicative));
        assert!(m.residual < 1e-12);
    }

    #[test]
    fn pure_additive() {
        let m = fit_variation_model("d", "l", &pairs(|p| p + dec!(5))).unwrap();
        assert_eq!((m.a, m.b, m.class), (dec!(1), dec!(5), VariationClass::Additive));
    }

    #[test]
    fn mixed_policy() {
        let m = fit_variation_model("d", "l", &pairs(|p| p * dec!(1.1) + dec!(2))).unwrap();
        assert_eq!((m.a, m.b, m.class), (dec!(1.1), dec!(2), VariationClass::Mixed));
        assert!(m.residual < 1e-9);
    }

    #[test]
    fn flat_and_thresholds() {
        assert_eq!(fit_variation_model("d", "l", &pairs(|p| p)).unwrap().class, VariationClass::Flat);
        assert_eq!(classify(dec!(1.005), dec!(0.49)), VariationClass::Flat);
        assert_eq!(classify(dec!(1.01), dec!(0)), VariationClass::Mixed);
        assert_eq!(classify(dec!(0.9), dec!(-0.2)), VariationClass::Multiplicative);
        assert_eq!(classify(dec!(1), dec!(-0.5)), VariationClass::Additive);
    }

    #[test]
    fn errors_and_degenerate() {
        assert!(matches!(
            fit_variation_model("d", "l", &pairs(|p| p)[..4]),
            Err(AnalyticsError::InsufficientPairs(4))
        ));
        let mut bad = pairs(|p| p);
        bad[0].0 = Decimal::ZERO;
        assert!(matches!(fit_variation_model("d", "l", &bad), Err(AnalyticsError::NonPositivePrice(_))));
        let same = vec![(dec!(10), dec!(12)); 6];
        let m = fit_variation_model("d", "l", &same).unwrap();
        assert!(m.degenerate);
        assert_eq!((m.a, m.class), (dec!(1.2), VariationClass::Mixed));
    }
}
