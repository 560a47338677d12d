//! Multi-vantage measurement of online price variation.
pub mod analytics;
pub mod crawl;
pub mod extract;
pub mod fx;
pub mod money;
pub mod sim;
pub mod testbed;
pub mod vantage;

pub use money::{Currency, Money, MoneyError};
