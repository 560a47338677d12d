use std::io::Write;
use std::path::Path;

use chrono::{DateTime, Utc};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::{AnalyticsError, LocationRatio, PairwiseGrid, RatioPoint};

pub const REPORT_SCHEMA: &str = "pricevar.report/1";

/// Versioned envelope around every emitted report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report<T> {
    pub schema: String,
    pub kind: String,
    pub generated_at: DateTime<Utc>,
    pub data: T,
}

impl<T: Serialize + DeserializeOwned> Report<T> {
    pub fn new(kind: &str, data: T) -> Self {
        Report {
            schema: REPORT_SCHEMA.to_string(),
            kind: kind.to_string(),
            generated_at: Utc::now(),
            data,
        }
    }

    pub fn write_json(&self, path: &Path) -> Result<(), AnalyticsError> {
        let text = serde_json::to_string_pretty(self).map_err(|e| AnalyticsError::Report(e.to_string()))?;
        std::fs::write(path, text)?;
        Ok(())
    }

    /// Reads a report, rejecting other schema versions and kinds.
    pub fn read_json(path: &Path, kind: &str) -> Result<Self, AnalyticsError> {
        let text = std::fs::read_to_string(path)?;
        let r: Report<T> = serde_json::from_str(&text).map_err(|e| AnalyticsError::Report(e.to_string()))?;
        if r.schema != REPORT_SCHEMA || r.kind != kind {
            return Err(AnalyticsError::Report(format!(
                "expected {REPORT_SCHEMA} {kind}, found {} {}",
                r.schema, r.kind
            )));
        }
        Ok(r)
    }
}

fn csv_err(e: csv::Error) -> AnalyticsError {
    AnalyticsError::Report(e.to_string())
}

/// One CSV row per point, for external plotting.
pub fn ratio_points_csv<W: Write>(points: &[RatioPoint], out: W) -> Result<(), AnalyticsError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["product_uri", "wave_id", "min_price", "ratio"]).map_err(csv_err)?;
    for p in points {
        w.write_record([&p.product_uri, &p.wave_id, &p.min_price.to_string(), &p.ratio.to_string()])
            .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn location_ratios_csv<W: Write>(ratios: &[LocationRatio], out: W) -> Result<(), AnalyticsError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["product_uri", "wave_id", "location", "rho"]).map_err(csv_err)?;
    for r in ratios {
        w.write_record([&r.product_uri, &r.wave_id, &r.location, &r.rho.to_string()])
            .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Long format: one row per point with its cell's row and column location.
pub fn grid_csv<W: Write>(grid: &PairwiseGrid, out: W) -> Result<(), AnalyticsError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["row", "col", "x", "y"]).map_err(csv_err)?;
    for (i, row) in grid.cells.iter().enumerate() {
        for (j, cell) in row.iter().enumerate() {
            for (x, y) in cell {
                w.write_record([&grid.locations[i], &grid.locations[j], &x.to_string(), &y.to_string()])
                    .map_err(csv_err)?;
            }
        }
    }
    w.flush()?;
    Ok(())
}
