//! Systematic crawls: product sampling, catalog discovery and repeated
//! multi-vantage waves that feed the same pipeline as crowd checks.

mod catalog;
mod plan;
mod scheduler;

use thiserror::Error;

use crate::vantage::VantageError;

pub use catalog::{
    catalog_ingest, fetch_listing, format_catalog, next_page, parse_catalog, read_catalog, sample_products,
    write_catalog, CatalogEntry,
};
pub use plan::{CrawlPlan, WaveReport, DEFAULT_CAP, DEFAULT_PERIOD, DEFAULT_WAVES};
pub use scheduler::{run_plans, schedule_waves, CrawlConfig, CrawlProgress, ObservationKey};

#[derive(Debug, Error)]
pub enum CrawlError {
    #[error("catalog is empty")]
    EmptyCatalog,
    #[error("no listing link matches {0}")]
    NoMatches(String),
    #[error("catalog line {line}: {message}")]
    Catalog { line: usize, message: String },
    #[error("invalid plan: {0}")]
    InvalidPlan(String),
    #[error("listing fetch: {0}")]
    Fetch(String),
    #[error(transparent)]
    Vantage(#[from] VantageError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
