use std::fmt;
use std::str::FromStr;

use num_rational::Ratio;
use num_traits::Zero;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Exact rational used for probabilities, excesses and gaps.
pub type Rational = Ratio<i128>;

/// Parses `"p/q"` or `"p"`.
pub fn parse_rational(text: &str) -> Option<Rational> {
    let (num, den) = match text.split_once('/') {
        Some((a, b)) => (a.trim().parse().ok()?, b.trim().parse().ok()?),
        None => (text.trim().parse().ok()?, 1i128),
    };
    (den != 0).then(|| Rational::new(num, den))
}

/// Serializes a rational as its reduced `"p/q"` string.
pub fn rational_string(r: &Rational) -> String {
    r.to_string()
}

/// Decimal approximation for display only.
pub fn approx(r: &Rational) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

pub mod serde_rational {
    use super::*;

    pub fn serialize<S: Serializer>(r: &Rational, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(r)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        let text = String::deserialize(d)?;
        parse_rational(&text)
            .ok_or_else(|| serde::de::Error::custom(format!("bad rational {text:?}")))
    }
}

/// A reduced fraction in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Probability(Rational);

impl Probability {
    /// Panics if the value falls outside `[0, 1]` or `den == 0`.
    pub fn new(num: i128, den: i128) -> Self {
        Probability::from_rational(Rational::new(num, den))
    }

    pub fn from_rational(r: Rational) -> Self {
        assert!(
            !r.is_negative_value() && r <= Rational::from_integer(1),
            "probability {r} outside [0, 1]"
        );
        Probability(r)
    }

    pub fn try_from_rational(r: Rational) -> Option<Self> {
        (!r.is_negative_value() && r <= Rational::from_integer(1)).then_some(Probability(r))
    }

    pub fn zero() -> Self {
        Probability(Rational::zero())
    }

    pub fn half() -> Self {
        Probability(Rational::new(1, 2))
    }

    pub fn value(&self) -> Rational {
        self.0
    }

    pub fn numer(&self) -> i128 {
        *self.0.numer()
    }

    pub fn denom(&self) -> i128 {
        *self.0.denom()
    }

    /// Signed distance above one half.
    pub fn excess(&self) -> Rational {
        self.0 - Rational::new(1, 2)
    }

    pub fn approx(&self) -> f64 {
        approx(&self.0)
    }
}

trait NegativeValue {
    fn is_negative_value(&self) -> bool;
}

impl NegativeValue for Rational {
    fn is_negative_value(&self) -> bool {
        *self < Rational::zero()
    }
}

impl fmt::Display for Probability {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl FromStr for Probability {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let r = parse_rational(s).ok_or_else(|| format!("bad rational {s:?}"))?;
        Probability::try_from_rational(r).ok_or_else(|| format!("{s} is not a probability"))
    }
}

impl Serialize for Probability {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Probability {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}
