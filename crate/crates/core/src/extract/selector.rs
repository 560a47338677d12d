//! Template-free price locators recorded from a user highlight.
//!
//! Two locator kinds exist. A dom-path is a `/`-separated list of element
//! steps from the document root, each `name` or `name[k]` where `k` is the
//! 1-based position among same-named element siblings (`body/div[2]/span[1]`).
//! A text-anchor is `offset|anchor`: the unique text node containing `anchor`,
//! then `offset` text nodes further in document order (0 means the text after
//! the anchor inside the same node).

use std::fmt;

use chrono::{DateTime, Utc};
use scraper::{ElementRef, Html, Node};
use serde::{Deserialize, Serialize};

use super::{normalize_whitespace, ExtractError, RawPriceText};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SelectorKind {
    DomPath,
    TextAnchor,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "SelectorRepr", into = "SelectorRepr")]
pub struct PriceSelector {
    kind: SelectorKind,
    expression: String,
    recorded_at: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct PathStep {
    name: String,
    index: usize,
}

impl PriceSelector {
    pub fn new(kind: SelectorKind, expression: &str, recorded_at: DateTime<Utc>) -> Result<Self, ExtractError> {
        let expression = expression.trim();
        if expression.is_empty() {
            return Err(ExtractError::InvalidSelector("empty expression".into()));
        }
        match kind {
            SelectorKind::DomPath => {
                parse_dom_path(expression)?;
            }
            SelectorKind::TextAnchor => {
                parse_text_anchor(expression)?;
            }
        }
        Ok(PriceSelector {
            kind,
            expression: expression.to_string(),
            recorded_at,
        })
    }

    pub fn dom_path(expression: &str) -> Result<Self, ExtractError> {
        PriceSelector::new(SelectorKind::DomPath, expression, DateTime::UNIX_EPOCH)
    }

    pub fn text_anchor(anchor: &str, offset: i32) -> Result<Self, ExtractError> {
        PriceSelector::new(SelectorKind::TextAnchor, &format!("{offset}|{anchor}"), DateTime::UNIX_EPOCH)
    }

    pub fn kind(&self) -> SelectorKind {
        self.kind
    }

    pub fn expression(&self) -> &str {
        &self.expression
    }

    pub fn recorded_at(&self) -> DateTime<Utc> {
        self.recorded_at
    }

    /// Same locator with another recording time.
    pub fn with_recorded_at(mut self, at: DateTime<Utc>) -> Self {
        self.recorded_at = at;
        self
    }
}

impl fmt::Display for PriceSelector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            SelectorKind::DomPath => write!(f, "dom-path:{}", self.expression),
            SelectorKind::TextAnchor => write!(f, "text-anchor:{}", self.expression),
        }
    }
}

impl std::str::FromStr for PriceSelector {
    type Err = ExtractError;

    /// Parses the `kind:expression` form produced by `Display`. A bare
    /// expression is taken as a dom-path.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if let Some(expr) = s.strip_prefix("text-anchor:") {
            PriceSelector::new(SelectorKind::TextAnchor, expr, DateTime::UNIX_EPOCH)
        } else {
            PriceSelector::dom_path(s.strip_prefix("dom-path:").unwrap_or(s))
        }
    }
}

#[derive(Serialize, Deserialize)]
struct SelectorRepr {
    kind: SelectorKind,
    expression: String,
    #[serde(default = "epoch")]
    recorded_at: DateTime<Utc>,
}

fn epoch() -> DateTime<Utc> {
    DateTime::UNIX_EPOCH
}

impl TryFrom<SelectorRepr> for PriceSelector {
    type Error = ExtractError;

    fn try_from(r: SelectorRepr) -> Result<Self, Self::Error> {
        PriceSelector::new(r.kind, &r.expression, r.recorded_at)
    }
}

impl From<PriceSelector> for SelectorRepr {
    fn from(s: PriceSelector) -> Self {
        SelectorRepr {
            kind: s.kind,
            expression: s.expression,
            recorded_at: s.recorded_at,
        }
    }
}

fn parse_dom_path(expr: &str) -> Result<Vec<PathStep>, ExtractError> {
    let invalid = |why: &str| ExtractError::InvalidSelector(format!("{expr}: {why}"));
    expr.trim_matches('/')
        .split('/')
        .map(|step| {
            let (name, index) = match step.split_once('[') {
                Some((name, rest)) => {
                    let idx = rest.strip_suffix(']').ok_or_else(|| invalid("unclosed index"))?;
                    let idx: usize = idx.parse().map_err(|_| invalid("index is not a number"))?;
                    if idx == 0 {
                        return Err(invalid("indices start at 1"));
                    }
                    (name, idx)
                }
                None => (step, 1),
            };
            let valid_name = name.chars().next().is_some_and(|c| c.is_ascii_alphabetic())
                && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '-');
            if !valid_name {
                return Err(invalid("bad element name"));
            }
            Ok(PathStep {
                name: name.to_ascii_lowercase(),
                index,
            })
        })
        .collect()
}

fn parse_text_anchor(expr: &str) -> Result<(i32, &str), ExtractError> {
    let (offset, anchor) = expr
        .split_once('|')
        .ok_or_else(|| ExtractError::InvalidSelector(format!("{expr}: expected `offset|anchor`")))?;
    let offset: i32 = offset
        .trim()
        .parse()
        .map_err(|_| ExtractError::InvalidSelector(format!("{expr}: offset is not an integer")))?;
    if anchor.trim().is_empty() {
        return Err(ExtractError::InvalidSelector(format!("{expr}: empty anchor")));
    }
    Ok((offset, anchor))
}

fn is_hidden_container(name: &str) -> bool {
    matches!(name, "script" | "style" | "noscript" | "template" | "head")
}

/// Rendered text nodes below `el` in document order.
pub(crate) fn text_nodes(el: ElementRef<'_>) -> Vec<String> {
    let mut out = Vec::new();
    collect_text(el, &mut out);
    out
}

fn collect_text(el: ElementRef<'_>, out: &mut Vec<String>) {
    for child in el.children() {
        match child.value() {
            Node::Text(t) => {
                let s = normalize_whitespace(t);
                if !s.is_empty() {
                    out.push(s);
                }
            }
            Node::Element(e) if !is_hidden_container(e.name()) => {
                if let Some(child_el) = ElementRef::wrap(child) {
                    collect_text(child_el, out);
                }
            }
            _ => {}
        }
    }
}

/// Evaluates `sel` against `page`; pure in `(page, sel)`.
pub fn apply_selector(page: &str, sel: &PriceSelector) -> Result<RawPriceText, ExtractError> {
    let doc = Html::parse_document(page);
    let root = doc.root_element();
    let hint = root.value().attr("lang").map(|s| s.trim().to_string()).filter(|s| !s.is_empty());

    let text = match sel.kind {
        SelectorKind::DomPath => {
            let steps = parse_dom_path(&sel.expression)?;
            let mut current = root;
            let mut steps = steps.as_slice();
            if let Some(first) = steps.first() {
                if first.name == "html" && first.index == 1 {
                    steps = &steps[1..];
                }
            }
            for step in steps {
                current = current
                    .children()
                    .filter_map(ElementRef::wrap)
                    .filter(|e| e.value().name().eq_ignore_ascii_case(&step.name))
                    .nth(step.index - 1)
                    .ok_or_else(|| ExtractError::SelectorMiss(sel.to_string()))?;
            }
            text_nodes(current).join(" ")
        }
        SelectorKind::TextAnchor => {
            let (offset, anchor) = parse_text_anchor(&sel.expression)?;
            let anchor = normalize_whitespace(anchor);
            let nodes = text_nodes(root);
            let hits: Vec<usize> = nodes
                .iter()
                .enumerate()
                .flat_map(|(i, t)| std::iter::repeat_n(i, t.matches(anchor.as_str()).count()))
                .collect();
            match hits.len() {
                0 => return Err(ExtractError::SelectorMiss(sel.to_string())),
                1 => {}
                n => return Err(ExtractError::SelectorAmbiguous { count: n }),
            }
            let at = hits[0];
            if offset == 0 {
                let node = &nodes[at];
                let after = &node[node.find(anchor.as_str()).expect("hit") + anchor.len()..];
                after.trim().to_string()
            } else {
                let target = at as i64 + offset as i64;
                usize::try_from(target)
                    .ok()
                    .and_then(|t| nodes.get(t))
                    .cloned()
                    .ok_or_else(|| ExtractError::SelectorMiss(sel.to_string()))?
            }
        }
    };

    RawPriceText::new(&text, hint).map_err(|_| ExtractError::SelectorMiss(sel.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    const PAGE: &str = r#"<!DOCTYPE html>
<html lang="de-DE"><head><title>Shop</title><script>var p = "€1,00";</script></head>
<body>
  <div class="nav">Home <span>Cart (2)</span></div>
  <div class="product">
    <span class="price">€19.99</span>
    <span class="old">€24.99</span>
  </div>
  <div class="recs"><p>Also bought: <b>€5.00</b></p></div>
</body></html>"#;

    #[test]
    fn dom_path_lookup() {
        let sel = PriceSelector::dom_path("body/div[2]/span[1]").unwrap();
        let raw = apply_selector(PAGE, &sel).unwrap();
        assert_eq!(raw.text(), "€19.99");
        assert_eq!(raw.locale_hint(), Some("de-DE"));
        // An explicit html step is accepted.
        let sel = PriceSelector::dom_path("html/body/div[2]/span[2]").unwrap();
        assert_eq!(apply_selector(PAGE, &sel).unwrap().text(), "€24.99");
    }

    #[test]
    fn absent_node_is_a_miss() {
        let sel = PriceSelector::dom_path("body/div[9]/span[1]").unwrap();
        assert!(matches!(apply_selector(PAGE, &sel), Err(ExtractError::SelectorMiss(_))));
    }

    #[test]
    fn invalid_paths_are_rejected() {
        for bad in ["", "body/div[0]", "body/div[x]", "body/div[2", "body/1div", "body//span"] {
            assert!(PriceSelector::dom_path(bad).is_err(), "{bad:?} should be invalid");
        }
        assert!(PriceSelector::new(SelectorKind::TextAnchor, "x|", DateTime::UNIX_EPOCH).is_err());
        assert!(PriceSelector::new(SelectorKind::TextAnchor, "Price", DateTime::UNIX_EPOCH).is_err());
    }

    #[test]
    fn text_anchor_regions() {
        let page = "<html><body><p>Our price: €7.50</p><p>List price</p><p>€9.00</p></body></html>";
        let sel = PriceSelector::text_anchor("Our price:", 0).unwrap();
        assert_eq!(apply_selector(page, &sel).unwrap().text(), "€7.50");
        let sel = PriceSelector::text_anchor("List price", 1).unwrap();
        assert_eq!(apply_selector(page, &sel).unwrap().text(), "€9.00");
        let sel = PriceSelector::text_anchor("price", 0).unwrap();
        assert!(matches!(
            apply_selector(page, &sel),
            Err(ExtractError::SelectorAmbiguous { count: 2 })
        ));
        let sel = PriceSelector::text_anchor("Sale", 0).unwrap();
        assert!(matches!(apply_selector(page, &sel), Err(ExtractError::SelectorMiss(_))));
    }

    #[test]
    fn scripts_are_not_rendered_text() {
        let sel = PriceSelector::text_anchor("var p", 0).unwrap();
        assert!(matches!(apply_selector(PAGE, &sel), Err(ExtractError::SelectorMiss(_))));
    }

    #[test]
    fn malformed_markup_is_recovered() {
        let page = "<html><body><div><span>€3.10<div><span>x</span></div></body>";
        let sel = PriceSelector::dom_path("body/div[1]/span[1]").unwrap();
        assert!(apply_selector(page, &sel).unwrap().text().starts_with("€3.10"));
    }

    #[test]
    fn selector_string_form_round_trips() {
        let sel: PriceSelector = "text-anchor:2|Total".parse().unwrap();
        assert_eq!(sel.kind(), SelectorKind::TextAnchor);
        assert_eq!(sel.to_string().parse::<PriceSelector>().unwrap(), sel);
        let sel: PriceSelector = "body/div[2]/span[1]".parse().unwrap();
        assert_eq!(sel.to_string(), "dom-path:body/div[2]/span[1]");
    }
}
