use std::collections::BTreeSet;
use std::fmt;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use url::Url;

use super::VantageError;
use crate::extract::PriceSelector;
use crate::money::Money;

/// A price check submitted on behalf of a requester.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRequest {
    pub product_uri: String,
    pub selector: PriceSelector,
    /// Opaque installation id.
    pub requester: String,
    /// Country-level location of the requester, if known.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub requester_country: Option<String>,
    pub submitted_at: DateTime<Utc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile: Option<PersonaProfile>,
}

impl CheckRequest {
    pub fn validate(&self) -> Result<(), VantageError> {
        validate_uri(&self.product_uri)?;
        if self.requester.trim().is_empty() {
            return Err(VantageError::InvalidRequest("requester id is empty".into()));
        }
        if let Some(p) = &self.profile {
            p.validate()?;
        }
        Ok(())
    }
}

/// Parses `uri` and checks it is an absolute http(s) URI.
pub fn validate_uri(uri: &str) -> Result<Url, VantageError> {
    let parsed = Url::parse(uri).map_err(|_| VantageError::InvalidUri(uri.to_string()))?;
    if !matches!(parsed.scheme(), "http" | "https") || parsed.host_str().is_none() {
        return Err(VantageError::InvalidUri(uri.to_string()));
    }
    Ok(parsed)
}

/// Host part of `uri`, lowercased, without port.
pub fn uri_domain(uri: &str) -> Option<String> {
    Url::parse(uri).ok()?.host_str().map(str::to_ascii_lowercase)
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct VantagePoint {
    pub id: String,
    pub country: String,
    pub city: String,
    /// Remote address the agent connected from.
    pub endpoint: String,
}

/// A fetch profile emulating one class of user.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PersonaProfile {
    pub name: String,
    /// Sent in this order, verbatim.
    #[serde(default)]
    pub headers: Vec<(String, String)>,
    #[serde(default)]
    pub cookies: Vec<(String, String)>,
    /// Account label; metadata only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub logged_in_as: Option<String>,
}

impl PersonaProfile {
    pub fn named(name: &str) -> Self {
        PersonaProfile {
            name: name.to_string(),
            ..Default::default()
        }
    }

    pub fn header(mut self, name: &str, value: &str) -> Self {
        self.headers.push((name.to_string(), value.to_string()));
        self
    }

    pub fn cookie(mut self, name: &str, value: &str) -> Self {
        self.cookies.push((name.to_string(), value.to_string()));
        self
    }

    pub fn validate(&self) -> Result<(), VantageError> {
        if self.name.trim().is_empty() {
            return Err(VantageError::InvalidRequest("profile name is empty".into()));
        }
        let mut seen = BTreeSet::new();
        for (name, _) in &self.headers {
            if !seen.insert(name.to_ascii_lowercase()) {
                return Err(VantageError::InvalidRequest(format!("duplicate header {name}")));
            }
        }
        Ok(())
    }

    /// `Cookie` header value, or `None` without cookies.
    pub fn cookie_header(&self) -> Option<String> {
        if self.cookies.is_empty() {
            return None;
        }
        Some(
            self.cookies
                .iter()
                .map(|(k, v)| format!("{k}={v}"))
                .collect::<Vec<_>>()
                .join("; "),
        )
    }

    /// Copy safe to put in reports: cookie values are replaced by a digest prefix.
    pub fn redacted(&self) -> PersonaProfile {
        let mut out = self.clone();
        for (_, v) in &mut out.cookies {
            let digest = Sha256::digest(v.as_bytes());
            *v = format!("sha256:{}", &hex::encode(digest)[..12]);
        }
        out
    }

    /// Stable identity of the profile's request-shaping content.
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        for (k, v) in self.headers.iter().chain(&self.cookies) {
            h.update(k.as_bytes());
            h.update([0]);
            h.update(v.as_bytes());
            h.update([1]);
        }
        hex::encode(h.finalize())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum GateFlag {
    /// Repeated fetches at one vantage disagreed.
    NoiseSuspect,
    ShippingIncludedUnknown,
    TaxIncludedUnknown,
}

/// One extracted price from one vantage in one wave.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriceObservation {
    pub check_id: String,
    pub wave_id: String,
    #[serde(default)]
    pub repetition: u32,
    pub product_uri: String,
    pub selector: PriceSelector,
    pub vantage: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile: Option<String>,
    pub money: Money,
    pub fetched_at: DateTime<Utc>,
    pub fetch_latency_ms: u64,
    pub snapshot_ref: String,
    #[serde(default)]
    pub gate_flags: BTreeSet<GateFlag>,
}

impl PriceObservation {
    pub fn domain(&self) -> Option<String> {
        uri_domain(&self.product_uri)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum FetchStatus {
    Ok,
    HttpError { code: u16 },
    Timeout,
    SelectorMiss,
}

impl fmt::Display for FetchStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FetchStatus::Ok => f.write_str("ok"),
            FetchStatus::HttpError { code } => write!(f, "http-error {code}"),
            FetchStatus::Timeout => f.write_str("timeout"),
            FetchStatus::SelectorMiss => f.write_str("selector-miss"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FetchResult {
    pub vantage: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile: Option<String>,
    pub status: FetchStatus,
    /// Response body; always present when `status` is ok.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub page: Option<String>,
    /// Fetch start on the agent's clock.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub started_at: Option<DateTime<Utc>>,
    #[serde(default)]
    pub latency_ms: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl FetchResult {
    pub fn timeout(vantage: &str, profile: Option<String>, detail: &str) -> Self {
        FetchResult {
            vantage: vantage.to_string(),
            profile,
            status: FetchStatus::Timeout,
            page: None,
            started_at: None,
            latency_ms: 0,
            detail: Some(detail.to_string()),
        }
    }

    pub fn is_ok(&self) -> bool {
        self.status == FetchStatus::Ok && self.page.is_some()
    }
}

/// Largest difference between fetch start times, over results that started.
pub fn start_spread(results: &[FetchResult]) -> Option<chrono::Duration> {
    let starts = results.iter().filter_map(|r| r.started_at);
    let (min, max) = starts.fold((None, None), |(lo, hi): (Option<DateTime<Utc>>, Option<DateTime<Utc>>), t| {
        (Some(lo.map_or(t, |l| l.min(t))), Some(hi.map_or(t, |h| h.max(t))))
    });
    Some(max? - min?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uri_validation() {
        assert!(validate_uri("https://shop.example/p/1").is_ok());
        assert!(matches!(validate_uri("ftp://x"), Err(VantageError::InvalidUri(_))));
        assert!(matches!(validate_uri("/relative"), Err(VantageError::InvalidUri(_))));
        assert_eq!(uri_domain("http://SimShop-3.test:8080/p/1").as_deref(), Some("simshop-3.test"));
    }

    #[test]
    fn profile_rules() {
        let p = PersonaProfile::named("a").header("User-Agent", "x").header("user-agent", "y");
        assert!(p.validate().is_err());
        let p = PersonaProfile::named("a").cookie("tier", "affluent").cookie("sid", "s3cret");
        assert_eq!(p.cookie_header().as_deref(), Some("tier=affluent; sid=s3cret"));
        let r = p.redacted();
        assert!(!serde_json::to_string(&r).unwrap().contains("s3cret"));
        assert_eq!(r.cookies[0].0, "tier");
        assert_ne!(p.fingerprint(), PersonaProfile::named("b").fingerprint());
    }

    #[test]
    fn status_wire_form() {
        let s = serde_json::to_string(&FetchStatus::HttpError { code: 404 }).unwrap();
        assert_eq!(s, r#"{"kind":"http-error","code":404}"#);
        let ok: FetchStatus = serde_json::from_str(r#"{"kind":"ok"}"#).unwrap();
        assert_eq!(ok, FetchStatus::Ok);
    }

    #[test]
    fn spread_ignores_missing_starts() {
        let t0 = DateTime::UNIX_EPOCH;
        let mut a = FetchResult::timeout("a", None, "x");
        let mut b = a.clone();
        a.started_at = Some(t0);
        b.started_at = Some(t0 + chrono::Duration::milliseconds(1500));
        let c = FetchResult::timeout("c", None, "x");
        assert_eq!(start_spread(&[a, b, c]), Some(chrono::Duration::milliseconds(1500)));
        assert_eq!(start_spread(&[]), None);
    }
}
