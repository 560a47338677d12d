use std::collections::{BTreeMap, BTreeSet};

use scraper::{Html, Selector};
use serde::{Deserialize, Serialize};
use url::Url;

/// Share of retailers embedding each third party.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThirdPartyReport {
    pub retailers: usize,
    /// Registrable domain -> retailers embedding it.
    pub counts: BTreeMap<String, usize>,
    pub presence: BTreeMap<String, f64>,
}

/// eTLD+1 of `host`; the host itself when the suffix list has no answer
/// (IP literals, single labels).
pub fn registrable_domain(host: &str) -> String {
    let host = host.trim_end_matches('.').to_ascii_lowercase();
    if host.parse::<std::net::IpAddr>().is_ok() {
        return host;
    }
    psl::domain_str(&host).map(str::to_string).unwrap_or(host)
}

/// Hosts referenced by `script`, `img` and `iframe` sources, resolved
/// against the retailer's own origin.
pub fn external_hosts(html: &str, retailer: &str) -> BTreeSet<String> {
    let doc = Html::parse_document(html);
    let sel = Selector::parse("script[src], img[src], iframe[src]").expect("static selector");
    let Ok(base) = Url::parse(&format!("https://{retailer}/")) else {
        return BTreeSet::new();
    };
    doc.select(&sel)
        .filter_map(|e| e.value().attr("src"))
        .filter_map(|src| base.join(src.trim()).ok())
        .filter_map(|u| u.host_str().map(str::to_ascii_lowercase))
        .collect()
}

/// Third parties of one retailer: referenced hosts whose registrable domain
/// differs from the retailer's.
pub fn third_parties_of(retailer: &str, snapshots: &[&str]) -> BTreeSet<String> {
    let own = registrable_domain(retailer);
    snapshots
        .iter()
        .flat_map(|html| external_hosts(html, retailer))
        .map(|h| registrable_domain(&h))
        .filter(|d| *d != own)
        .collect()
}

/// `snapshots`: retailer domain -> page bodies fetched from it.
pub fn third_party_scan(snapshots: &BTreeMap<String, Vec<String>>) -> ThirdPartyReport {
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    for (retailer, pages) in snapshots {
        let pages: Vec<&str> = pages.iter().map(String::as_str).collect();
        for tp in third_parties_of(retailer, &pages) {
            *counts.entry(tp).or_default() += 1;
        }
    }
    let retailers = snapshots.len();
    let presence = counts
        .iter()
        .map(|(k, c)| (k.clone(), *c as f64 / retailers as f64))
        .collect();
    ThirdPartyReport {
        retailers,
        counts,
        presence,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hosts_and_registrable_domains() {
        let page = r#"<html><head><script src="https://www.tracker-a.test/t.js"></script>
            <script src="/local.js"></script></head><body>
            <img src="//cdn.pixels.example.com/p.gif"><iframe src="https://shop.test:8443/x"></iframe>
            <a href="https://ignored.test/">x</a></body></html>"#;
        let hosts = external_hosts(page, "shop.test");
        assert_eq!(
            hosts.into_iter().collect::<Vec<_>>(),
            ["cdn.pixels.example.com", "shop.test", "www.tracker-a.test"]
        );
        let tps = third_parties_of("shop.test", &[page]);
        assert_eq!(tps.into_iter().collect::<Vec<_>>(), ["example.com", "tracker-a.test"]);
        assert_eq!(registrable_domain("a.b.example.co.uk"), "example.co.uk");
        assert_eq!(registrable_domain("127.0.0.1"), "127.0.0.1");
    }

    #[test]
    fn no_external_references() {
        let mut m = BTreeMap::new();
        m.insert("shop.test".to_string(), vec!["<p>plain</p>".to_string()]);
        let r = third_party_scan(&m);
        assert_eq!(r.retailers, 1);
        assert!(r.counts.is_empty());
    }
}
