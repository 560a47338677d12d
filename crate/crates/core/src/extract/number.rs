//! Locale-aware reading of the numeric part of a price.

use std::str::FromStr;

use rust_decimal::Decimal;

use super::config::{GroupSeparator, NumberConvention};
use super::ExtractError;

fn is_space(c: char) -> bool {
    matches!(c, ' ' | '\u{a0}' | '\u{202f}' | '\u{2009}')
}

fn is_apostrophe(c: char) -> bool {
    matches!(c, '\'' | '\u{2019}')
}

fn is_separator(c: char) -> bool {
    c == '.' || c == ',' || is_space(c) || is_apostrophe(c)
}

/// The single digit run in `text`, including separators that sit between digits.
///
/// Fails when the text holds no digit or more than one separate number.
pub(crate) fn numeric_token(text: &str) -> Result<&str, ExtractError> {
    let unparseable = || ExtractError::UnparseablePrice(text.to_string());
    let start = text.find(|c: char| c.is_ascii_digit()).ok_or_else(unparseable)?;
    let mut end = start;
    let mut chars = text[start..].char_indices().peekable();
    while let Some((off, c)) = chars.next() {
        if c.is_ascii_digit() {
            end = start + off + c.len_utf8();
        } else if is_separator(c) {
            // A separator only belongs to the number when a digit follows it.
            match chars.peek() {
                Some((_, next)) if next.is_ascii_digit() => {}
                _ => break,
            }
        } else {
            break;
        }
    }
    if text[end..].contains(|c: char| c.is_ascii_digit()) {
        return Err(unparseable());
    }
    Ok(&text[start..end])
}

/// Reads `token` (digits and separators only) under an explicit convention.
///
/// Spaces and apostrophes are accepted as group separators under every
/// convention; the convention decides the roles of `.` and `,`.
pub(crate) fn read_with_convention(token: &str, conv: NumberConvention) -> Result<Decimal, ExtractError> {
    let unparseable = || ExtractError::UnparseablePrice(token.to_string());
    let group_char = match conv.group {
        GroupSeparator::Char(c) => Some(c),
        GroupSeparator::Space => None,
    };

    let mut integer_groups: Vec<String> = vec![String::new()];
    let mut fraction: Option<String> = None;
    for c in token.chars() {
        if c.is_ascii_digit() {
            match fraction.as_mut() {
                Some(f) => f.push(c),
                None => integer_groups.last_mut().expect("non-empty").push(c),
            }
        } else if c == conv.decimal {
            if fraction.is_some() {
                return Err(unparseable());
            }
            fraction = Some(String::new());
        } else if Some(c) == group_char || is_space(c) || is_apostrophe(c) {
            if fraction.is_some() {
                return Err(unparseable());
            }
            integer_groups.push(String::new());
        } else {
            return Err(unparseable());
        }
    }

    if integer_groups.len() > 1 {
        let first = &integer_groups[0];
        if first.is_empty() || first.len() > 3 || integer_groups[1..].iter().any(|g| g.len() != 3) {
            return Err(unparseable());
        }
    }
    let integer: String = integer_groups.concat();
    if integer.is_empty() {
        return Err(unparseable());
    }
    let literal = match fraction {
        Some(f) if f.is_empty() => return Err(unparseable()),
        Some(f) => format!("{integer}.{f}"),
        None => integer,
    };
    Decimal::from_str(&literal).map_err(|_| unparseable())
}

/// Chooses the convention for `token` when no locale hint is available.
///
/// Rules: with both `.` and `,` present the rightmost is the decimal mark; a
/// mark appearing more than once is grouping; a single mark followed by
/// exactly three digits is grouping when the grouped reading exceeds 999;
/// any other single mark is decimal.
pub(crate) fn infer_convention(token: &str) -> NumberConvention {
    let last_dot = token.rfind('.');
    let last_comma = token.rfind(',');
    match (last_dot, last_comma) {
        (Some(d), Some(c)) => {
            if d > c {
                NumberConvention::ANGLOPHONE
            } else {
                NumberConvention::CONTINENTAL
            }
        }
        (None, None) => NumberConvention::ANGLOPHONE,
        (Some(pos), None) | (None, Some(pos)) => {
            let mark = token[pos..].chars().next().expect("separator present");
            let as_decimal = if mark == '.' {
                NumberConvention::ANGLOPHONE
            } else {
                NumberConvention::CONTINENTAL
            };
            let as_group = if mark == '.' {
                NumberConvention::CONTINENTAL
            } else {
                NumberConvention::ANGLOPHONE
            };
            if token.matches(mark).count() > 1 {
                return as_group;
            }
            let after = &token[pos + 1..];
            let digits_after = after.chars().take_while(char::is_ascii_digit).count();
            if digits_after == 3 && after.len() == 3 {
                let grouped: String = token.chars().filter(char::is_ascii_digit).collect();
                let value = Decimal::from_str(&grouped).unwrap_or(Decimal::ZERO);
                if value > Decimal::from(999) {
                    return as_group;
                }
            }
            as_decimal
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rust_decimal_macros::dec;

    #[test]
    fn token_spans_grouped_digits() {
        assert_eq!(numeric_token("€1.234,56").unwrap(), "1.234,56");
        assert_eq!(numeric_token("1 234,56 €").unwrap(), "1 234,56");
        assert_eq!(numeric_token("Price: $19.99.").unwrap(), "19.99");
        assert!(numeric_token("no digits").is_err());
        assert!(numeric_token("2 for $10").is_err());
    }

    #[test]
    fn inference_rules() {
        assert_eq!(infer_convention("1,234.56"), NumberConvention::ANGLOPHONE);
        assert_eq!(infer_convention("1.234,56"), NumberConvention::CONTINENTAL);
        assert_eq!(infer_convention("19,99"), NumberConvention::CONTINENTAL);
        assert_eq!(infer_convention("19.99"), NumberConvention::ANGLOPHONE);
        assert_eq!(infer_convention("1.234"), NumberConvention::CONTINENTAL);
        assert_eq!(infer_convention("1,234"), NumberConvention::ANGLOPHONE);
        // Grouped reading 123 does not exceed 999, so the comma is decimal.
        assert_eq!(infer_convention("0,123"), NumberConvention::CONTINENTAL);
        assert_eq!(infer_convention("1.234.567"), NumberConvention::CONTINENTAL);
    }

    #[test]
    fn strict_grouping() {
        let en = NumberConvention::ANGLOPHONE;
        assert_eq!(read_with_convention("1,234,567.5", en).unwrap(), dec!(1234567.5));
        assert!(read_with_convention("12,34", en).is_err());
        assert!(read_with_convention("1234,567", en).is_err());
        assert!(read_with_convention("1.2.3", en).is_err());
        assert!(read_with_convention("1.234,56", en).is_err());
        assert_eq!(read_with_convention("1'234.50", en).unwrap(), dec!(1234.50));
    }
}
