//! Statistics over replayed observations: per-product ratios, retailer
//! summaries, model fits, location attribution, third parties and personas.
//! Everything here is a pure function of its input except `persona_check`.

mod fit;
mod locations;
mod persona;
mod profile;
mod report;
mod stats;
mod thirdparty;

use thiserror::Error;

use crate::fx::FxError;

pub use fit::{classify, fit_domain, fit_variation_model, location_pairs, VariationClass, VariationModel, MIN_FIT_PAIRS, MIN_FIT_PRICE};
pub use locations::{location_ratios, pairwise_grid, profile_rhos, LocationRatio, LocationReport, PairwiseGrid};
pub use persona::{persona_check, persona_compare, PersonaComparison, PersonaPrice};
pub use profile::{product_profile, profiles_from_observations, ProductProfile};
pub use report::{grid_csv, location_ratios_csv, ratio_points_csv, Report, REPORT_SCHEMA};
pub use stats::{
    band_report, by_domain, default_band_edges, quantile, ratio_vs_price, retailer_summary, summarize_all, PriceBand,
    RatioPoint, RatioStats, RetailerSummary,
};
pub use thirdparty::{external_hosts, registrable_domain, third_parties_of, third_party_scan, ThirdPartyReport};

#[derive(Debug, Error)]
pub enum AnalyticsError {
    #[error("need at least two observations, got {0}")]
    InsufficientObservations(usize),
    #[error("need at least 5 pairs, got {0}")]
    InsufficientPairs(usize),
    #[error("need at least two locations, got {0}")]
    InsufficientLocations(usize),
    #[error("prices must be positive: {0}")]
    NonPositivePrice(String),
    #[error("{0}")]
    MixedInput(String),
    #[error("only {ok} of {needed} required fetches succeeded")]
    QuorumFailure { ok: usize, needed: usize },
    #[error("vantage network: {0}")]
    Vantage(String),
    #[error("report: {0}")]
    Report(String),
    #[error(transparent)]
    Fx(#[from] FxError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
