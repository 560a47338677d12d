//! Product and listing page templates.

use rust_decimal::Decimal;

use super::policy::{CatalogItem, PricingPolicy, TemplateId};
use crate::extract::{CurrencyConfig, GroupSeparator, NumberConvention, PriceSelector};
use crate::money::{Currency, Money};

/// Products per listing page.
pub const LISTING_PAGE_SIZE: usize = 100;

impl TemplateId {
    /// Locator of the main price on every product page of this template.
    pub fn price_selector(self) -> PriceSelector {
        let path = match self {
            TemplateId::Classic => "body/div[2]/span[2]",
            TemplateId::Grid => "body/main/section[2]/div[1]/p[2]",
        };
        PriceSelector::dom_path(path).expect("template selector is valid")
    }
}

fn symbol(c: Currency) -> &'static str {
    match c.as_str() {
        "USD" | "CAD" | "MXN" => "$",
        "AUD" => "A$",
        "EUR" => "€",
        "GBP" => "£",
        "BRL" => "R$",
        "CHF" => "CHF",
        "SEK" | "DKK" | "NOK" => "kr",
        "PLN" => "zł",
        _ => "",
    }
}

/// Formats `m` the way a shop in `locale` would show it.
pub fn display_price(m: &Money, locale: &str, config: &CurrencyConfig) -> String {
    let conv = config.convention(locale).unwrap_or(NumberConvention::ANGLOPHONE);
    let mut amount = m.amount();
    amount.rescale(2);
    let text = amount.to_string();
    let (int, frac) = text.split_once('.').unwrap_or((&text, "00"));
    let group = match conv.group {
        GroupSeparator::Char(c) => c,
        GroupSeparator::Space => '\u{a0}',
    };
    let mut grouped = String::new();
    for (i, ch) in int.chars().enumerate() {
        if i > 0 && (int.len() - i) % 3 == 0 {
            grouped.push(group);
        }
        grouped.push(ch);
    }
    let number = format!("{grouped}{}{frac}", conv.decimal);
    let sym = symbol(m.currency());
    if sym.is_empty() {
        format!("{} {number}", m.currency())
    } else if conv.decimal == ',' && !matches!(sym, "R$" | "CHF") {
        format!("{number}\u{a0}{sym}")
    } else if sym.len() > 1 && sym.chars().all(|c| c.is_ascii_alphabetic()) {
        format!("{sym} {number}")
    } else {
        format!("{sym}{number}")
    }
}

/// Deterministic decoy prices for the "also bought" blocks of a product.
fn decoys(item: &CatalogItem, price: &Money) -> Vec<Money> {
    let seed: u32 = item.id.bytes().fold(17u32, |h, b| h.wrapping_mul(31).wrapping_add(b as u32));
    [37u32, 61, 83]
        .iter()
        .enumerate()
        .map(|(i, k)| {
            let pct = Decimal::from(20 + (seed.wrapping_mul(*k) % 150)) / Decimal::ONE_HUNDRED;
            let raw = price.amount() * pct + Decimal::from(i as u32 + 1);
            Money::rounded(raw, price.currency()).expect("positive decoy")
        })
        .collect()
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn third_party_tags(policy: &PricingPolicy) -> (String, String) {
    let mut head = String::new();
    let mut body = String::new();
    for (i, host) in policy.third_parties.iter().enumerate() {
        match i % 3 {
            0 => head.push_str(&format!("<script src=\"https://{host}/tag.js\"></script>\n")),
            1 => body.push_str(&format!("<img src=\"//{host}/pixel.gif\" width=\"1\" height=\"1\" alt=\"\">\n")),
            _ => body.push_str(&format!("<iframe src=\"https://{host}/frame\" hidden></iframe>\n")),
        }
    }
    (head, body)
}

/// Product page with the main price at the template's selector and decoy
/// prices both before and after it.
pub fn product_page(policy: &PricingPolicy, item: &CatalogItem, price: &Money, locale: &str, config: &CurrencyConfig) -> String {
    let shown = escape(&display_price(price, locale, config));
    let d: Vec<String> = decoys(item, price)
        .iter()
        .map(|m| escape(&display_price(m, locale, config)))
        .collect();
    let name = escape(if item.name.is_empty() { &item.id } else { &item.name });
    let domain = escape(&policy.domain);
    let code = price.currency();
    let (head_tags, body_tags) = third_party_tags(policy);
    match policy.template {
        TemplateId::Classic => format!(
            r#"<!DOCTYPE html>
<html lang="{locale}">
<head><meta charset="utf-8"><title>{name} | {domain}</title>
<script>var cart = {{"items": 0, "total": "0.00"}};</script>
{head_tags}</head>
<body>
<div class="top"><a href="/">{domain}</a> <span class="deal">Bundle deal from {d0}</span></div>
<div class="product"><h1>{name}</h1><span class="sku">SKU {id}</span><span class="price">{shown}</span><span class="was">Compare at {d1}</span></div>
<div class="also"><h2>Customers also bought</h2><ul><li>Accessory kit {d2}</li></ul></div>
<div class="foot"><p>Prices shown in {code}.</p>
{body_tags}</div>
</body>
</html>
"#,
            id = escape(&item.id),
            d0 = d[0],
            d1 = d[1],
            d2 = d[2],
        ),
        TemplateId::Grid => format!(
            r#"<!DOCTYPE html>
<html lang="{locale}">
<head><meta charset="utf-8"><title>{domain}: {name}</title>
{head_tags}</head>
<body>
<header><nav><a href="/list">All products</a></nav><p class="banner">Today only: {d0}</p></header>
<main>
<section class="gallery"><div><p>{name}</p><p>Bestseller at {d1}</p></div></section>
<section class="buy"><div class="box"><p>{name}</p><p>{shown}</p><p>Prices shown in {code}.</p></div><div class="box"><p>Extended warranty</p><p>{d2}</p></div></section>
</main>
<footer>{body_tags}</footer>
</body>
</html>
"#,
            d0 = d[0],
            d1 = d[1],
            d2 = d[2],
        ),
    }
}

/// One listing page (0-based) with product links and a few unrelated ones.
pub fn listing_page(policy: &PricingPolicy, page: usize) -> String {
    let items = policy.catalog.iter().skip(page * LISTING_PAGE_SIZE).take(LISTING_PAGE_SIZE);
    let mut links = String::new();
    for item in items {
        links.push_str(&format!("<li><a href=\"/p/{0}\">{1}</a></li>\n", escape(&item.id), escape(&item.name)));
    }
    let next = if (page + 1) * LISTING_PAGE_SIZE < policy.catalog.len() {
        format!("<a rel=\"next\" href=\"/list?page={}\">Next</a>", page + 1)
    } else {
        String::new()
    };
    format!(
        "<!DOCTYPE html>\n<html lang=\"en\"><head><title>{d}</title></head><body>\n\
         <nav><a href=\"/\">Home</a> <a href=\"/cart\">Cart</a> <a href=\"/about\">About</a></nav>\n\
         <ul>\n{links}</ul>\n{next}\n</body></html>\n",
        d = escape(&policy.domain)
    )
}
