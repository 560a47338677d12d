//! Exact monetary amounts and ISO-4217 currency codes.

use std::fmt;
use std::str::FromStr;

use rust_decimal::Decimal;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Smallest and largest number of fraction digits a [`Money`] amount carries.
pub const MIN_FRACTION_DIGITS: u32 = 2;
pub const MAX_FRACTION_DIGITS: u32 = 4;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MoneyError {
    #[error("invalid currency code {0:?}: expected three ASCII uppercase letters")]
    InvalidCurrency(String),
    #[error("amount must be strictly positive, got {0}")]
    NonPositive(Decimal),
    #[error("amount {0} has more than {MAX_FRACTION_DIGITS} fraction digits")]
    TooPrecise(Decimal),
}

/// A three-letter ISO-4217 currency code.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Currency([u8; 3]);

impl Currency {
    pub const USD: Currency = Currency(*b"USD");
    pub const EUR: Currency = Currency(*b"EUR");
    pub const GBP: Currency = Currency(*b"GBP");

    pub fn new(code: &str) -> Result<Self, MoneyError> {
        let bytes = code.as_bytes();
        if bytes.len() != 3 || !bytes.iter().all(u8::is_ascii_uppercase) {
            return Err(MoneyError::InvalidCurrency(code.to_string()));
        }
        Ok(Currency([bytes[0], bytes[1], bytes[2]]))
    }

    pub fn as_str(&self) -> &str {
        // Constructed only from ASCII uppercase bytes.
        std::str::from_utf8(&self.0).expect("currency codes are ASCII")
    }
}

impl fmt::Display for Currency {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl fmt::Debug for Currency {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Currency({})", self.as_str())
    }
}

impl FromStr for Currency {
    type Err = MoneyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Currency::new(s)
    }
}

impl Serialize for Currency {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for Currency {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        Currency::new(&s).map_err(serde::de::Error::custom)
    }
}

/// A strictly positive exact amount in one currency.
///
/// The amount always carries between two and four fraction digits; amounts
/// with fewer digits are padded (`1234.5` becomes `1234.50`).
#[derive(Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "MoneyRepr", into = "MoneyRepr")]
pub struct Money {
    amount: Decimal,
    currency: Currency,
}

impl Money {
    pub fn new(amount: Decimal, currency: Currency) -> Result<Self, MoneyError> {
        if amount <= Decimal::ZERO {
            return Err(MoneyError::NonPositive(amount));
        }
        let mut amount = amount.normalize();
        if amount.scale() > MAX_FRACTION_DIGITS {
            return Err(MoneyError::TooPrecise(amount));
        }
        if amount.scale() < MIN_FRACTION_DIGITS {
            amount.rescale(MIN_FRACTION_DIGITS);
        }
        Ok(Money { amount, currency })
    }

    /// Rounds `amount` to cents (half away from zero) before constructing.
    pub fn rounded(amount: Decimal, currency: Currency) -> Result<Self, MoneyError> {
        let cents = amount.round_dp_with_strategy(
            MIN_FRACTION_DIGITS,
            rust_decimal::RoundingStrategy::MidpointAwayFromZero,
        );
        Money::new(cents, currency)
    }

    pub fn amount(&self) -> Decimal {
        self.amount
    }

    pub fn currency(&self) -> Currency {
        self.currency
    }

    /// Whether the amount is exactly representable with two fraction digits.
    pub fn is_cent_granular(&self) -> bool {
        self.amount.normalize().scale() <= MIN_FRACTION_DIGITS
    }
}

impl fmt::Debug for Money {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Money({} {})", self.currency, self.amount)
    }
}

impl fmt::Display for Money {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&crate::extract::canonical_format(self))
    }
}

#[derive(Serialize, Deserialize)]
struct MoneyRepr {
    #[serde(with = "rust_decimal::serde::str")]
    amount: Decimal,
    currency: Currency,
}

impl TryFrom<MoneyRepr> for Money {
    type Error = MoneyError;

    fn try_from(r: MoneyRepr) -> Result<Self, Self::Error> {
        Money::new(r.amount, r.currency)
    }
}

impl From<Money> for MoneyRepr {
    fn from(m: Money) -> Self {
        MoneyRepr {
            amount: m.amount,
            currency: m.currency,
        }
    }
}
