//! Snapshots daily low/high quotes from an external rate service into the
//! rate-record format.
//!
//! The service is expected to answer `GET <endpoint>?date=YYYY-MM-DD` with a
//! JSON array of `{"base", "quote", "low", "high"}` objects, amounts as
//! strings or numbers.

use std::fs::OpenOptions;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use chrono::{NaiveDate, Utc};
use parking_lot::RwLock;
use rust_decimal::Decimal;
use serde::Deserialize;

use super::{FxError, RateTable, RateWindow};
use crate::money::Currency;

/// Shared pointer to the current immutable table; readers clone the `Arc`.
#[derive(Debug, Clone)]
pub struct RateHandle(Arc<RwLock<Arc<RateTable>>>);

impl RateHandle {
    pub fn new(table: RateTable) -> Self {
        RateHandle(Arc::new(RwLock::new(Arc::new(table))))
    }

    pub fn current(&self) -> Arc<RateTable> {
        self.0.read().clone()
    }

    pub fn replace(&self, table: RateTable) {
        *self.0.write() = Arc::new(table);
    }
}

#[derive(Deserialize)]
struct Quote {
    base: Currency,
    quote: Currency,
    #[serde(deserialize_with = "lenient_decimal")]
    low: Decimal,
    #[serde(deserialize_with = "lenient_decimal")]
    high: Decimal,
}

/// Accepts `"1.30"` or `1.30`; numbers are read from their JSON text.
fn lenient_decimal<'de, D: serde::Deserializer<'de>>(d: D) -> Result<Decimal, D::Error> {
    use std::str::FromStr;
    let text = match serde_json::Value::deserialize(d)? {
        serde_json::Value::String(s) => s,
        serde_json::Value::Number(n) => n.to_string(),
        other => return Err(serde::de::Error::custom(format!("expected a decimal, got {other}"))),
    };
    Decimal::from_str(&text)
        .or_else(|_| Decimal::from_scientific(&text))
        .map_err(serde::de::Error::custom)
}

pub struct RateIngestClient {
    endpoint: url::Url,
    http: reqwest::Client,
}

impl RateIngestClient {
    pub fn new(endpoint: &str) -> Result<Self, FxError> {
        let endpoint = url::Url::parse(endpoint).map_err(|e| FxError::Ingest(format!("bad endpoint: {e}")))?;
        let http = reqwest::Client::builder()
            .timeout(Duration::from_secs(30))
            .build()
            .map_err(|e| FxError::Ingest(e.to_string()))?;
        Ok(RateIngestClient { endpoint, http })
    }

    pub async fn fetch_day(&self, date: NaiveDate) -> Result<Vec<RateWindow>, FxError> {
        let mut url = self.endpoint.clone();
        url.query_pairs_mut().append_pair("date", &date.to_string());
        let resp = self
            .http
            .get(url)
            .send()
            .await
            .and_then(|r| r.error_for_status())
            .map_err(|e| FxError::Ingest(e.to_string()))?;
        let body = resp.text().await.map_err(|e| FxError::Ingest(e.to_string()))?;
        let quotes: Vec<Quote> = serde_json::from_str(&body).map_err(|e| FxError::Ingest(format!("bad payload: {e}")))?;
        quotes
            .into_iter()
            .map(|q| RateWindow::new(date, q.base, q.quote, q.low, q.high))
            .collect()
    }

    /// Fetches `date`, appends records not already in `table` to `path`, and
    /// returns the extended table.
    pub async fn snapshot_day(&self, date: NaiveDate, table: &RateTable, path: &Path) -> Result<RateTable, FxError> {
        let fresh: Vec<RateWindow> = self
            .fetch_day(date)
            .await?
            .into_iter()
            .filter(|w| {
                !table
                    .records()
                    .iter()
                    .any(|r| r.date == w.date && r.base == w.base && r.quote == w.quote)
            })
            .collect();
        let next = table.extended(fresh.iter().copied())?;
        let mut file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(|e| FxError::Io(e.to_string()))?;
        for w in &fresh {
            writeln!(file, "{}", w.to_record()).map_err(|e| FxError::Io(e.to_string()))?;
        }
        file.flush().map_err(|e| FxError::Io(e.to_string()))?;
        Ok(next)
    }
}

/// Runs [`RateIngestClient::snapshot_day`] for the current UTC day every
/// `period`, publishing each new table through `handle`.
pub fn spawn_periodic_ingest(
    client: RateIngestClient,
    path: PathBuf,
    handle: RateHandle,
    period: Duration,
) -> tokio::task::JoinHandle<()> {
    tokio::spawn(async move {
        let mut ticker = tokio::time::interval(period);
        loop {
            ticker.tick().await;
            let today = Utc::now().date_naive();
            match client.snapshot_day(today, &handle.current(), &path).await {
                Ok(next) => handle.replace(next),
                Err(e) => tracing::warn!(error = %e, "rate ingestion failed"),
            }
        }
    })
}
