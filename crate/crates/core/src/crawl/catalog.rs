use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::Path;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use regex::Regex;
use scraper::{Html, Selector};
use serde::{Deserialize, Serialize};
use url::Url;

use super::CrawlError;
use crate::extract::PriceSelector;
use crate::vantage::{fetch_body, FetchConfig};

/// One product to crawl and where its price sits.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CatalogEntry {
    pub uri: String,
    pub selector: PriceSelector,
}

/// Uniform sample without replacement of `min(cap, |catalog|)` entries, in
/// catalog order. Deterministic for a fixed seed.
pub fn sample_products(catalog: &[CatalogEntry], cap: usize, seed: u64) -> Result<Vec<CatalogEntry>, CrawlError> {
    if catalog.is_empty() {
        return Err(CrawlError::EmptyCatalog);
    }
    if cap == 0 {
        return Err(CrawlError::InvalidPlan("cap must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked = index::sample(&mut rng, catalog.len(), cap.min(catalog.len())).into_vec();
    picked.sort_unstable();
    Ok(picked.into_iter().map(|i| catalog[i].clone()).collect())
}

/// Parses `uri<TAB>selector` lines; blank lines and `#` comments are skipped.
pub fn parse_catalog(text: &str) -> Result<Vec<CatalogEntry>, CrawlError> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let bad = |message: String| CrawlError::Catalog { line: n + 1, message };
        let (uri, sel) = line
            .split_once('\t')
            .ok_or_else(|| bad("expected uri<TAB>selector".into()))?;
        crate::vantage::validate_uri(uri).map_err(|e| bad(e.to_string()))?;
        let selector: PriceSelector = sel.parse().map_err(|e: crate::extract::ExtractError| bad(e.to_string()))?;
        out.push(CatalogEntry {
            uri: uri.to_string(),
            selector,
        });
    }
    Ok(out)
}

pub fn format_catalog(entries: &[CatalogEntry]) -> String {
    let mut out = String::new();
    for e in entries {
        let _ = writeln!(out, "{}\t{}", e.uri, e.selector);
    }
    out
}

pub fn read_catalog(path: &Path) -> Result<Vec<CatalogEntry>, CrawlError> {
    parse_catalog(&std::fs::read_to_string(path)?)
}

pub fn write_catalog(path: &Path, entries: &[CatalogEntry]) -> Result<(), CrawlError> {
    std::fs::write(path, format_catalog(entries))?;
    Ok(())
}

/// Product URIs linked from listing pages `(page url, html)` whose absolute
/// form matches `pattern`, first occurrence order, each paired with the
/// retailer's confirmed `selector`.
pub fn catalog_ingest(
    pages: &[(String, String)],
    pattern: &Regex,
    selector: &PriceSelector,
) -> Result<Vec<CatalogEntry>, CrawlError> {
    let anchors = Selector::parse("a[href]").expect("static selector");
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (base, html) in pages {
        let Ok(base) = Url::parse(base) else {
            continue;
        };
        let doc = Html::parse_document(html);
        for a in doc.select(&anchors) {
            let Some(url) = a.value().attr("href").and_then(|h| base.join(h.trim()).ok()) else {
                continue;
            };
            let url = url.to_string();
            if pattern.is_match(&url) && seen.insert(url.clone()) {
                out.push(CatalogEntry {
                    uri: url,
                    selector: selector.clone(),
                });
            }
        }
    }
    if out.is_empty() {
        return Err(CrawlError::NoMatches(pattern.as_str().to_string()));
    }
    Ok(out)
}

/// Target of the page's `rel=next` link, resolved against `base`.
pub fn next_page(base: &str, html: &str) -> Option<String> {
    let sel = Selector::parse("a[rel~=next][href], link[rel~=next][href]").expect("static selector");
    let doc = Html::parse_document(html);
    let href = doc.select(&sel).next()?.value().attr("href")?;
    Url::parse(base).ok()?.join(href).ok().map(|u| u.to_string())
}

/// Fetches a listing and its `rel=next` successors, at most `max_pages`.
pub async fn fetch_listing(cfg: &FetchConfig, start: &str, max_pages: usize) -> Result<Vec<(String, String)>, CrawlError> {
    let mut pages = Vec::new();
    let mut visited = HashSet::new();
    let mut next = Some(start.to_string());
    while let Some(url) = next.take() {
        if pages.len() >= max_pages || !visited.insert(url.clone()) {
            break;
        }
        let (code, body) = fetch_body(cfg, &url, None).await.map_err(CrawlError::Fetch)?;
        if !(200..300).contains(&code) {
            return Err(CrawlError::Fetch(format!("{url}: HTTP {code}")));
        }
        next = next_page(&url, &body);
        pages.push((url, body));
    }
    Ok(pages)
}
