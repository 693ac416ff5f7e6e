use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

/// A nonnegative integer, or the sentinel for "exceeded the configured budget".
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum ExtNat {
    Fin(BigUint),
    Overflow,
}

impl ExtNat {
    pub fn zero() -> ExtNat {
        ExtNat::Fin(BigUint::zero())
    }

    pub fn one() -> ExtNat {
        ExtNat::Fin(BigUint::one())
    }

    pub fn from_u64(v: u64) -> ExtNat {
        ExtNat::Fin(BigUint::from(v))
    }

    pub fn is_overflow(&self) -> bool {
        matches!(self, ExtNat::Overflow)
    }

    pub fn finite(&self) -> Option<&BigUint> {
        match self {
            ExtNat::Fin(v) => Some(v),
            ExtNat::Overflow => None,
        }
    }

    pub fn to_u64(&self) -> Option<u64> {
        self.finite().and_then(|v| v.to_u64())
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            ExtNat::Fin(v) => v.to_f64().unwrap_or(f64::INFINITY),
            ExtNat::Overflow => f64::INFINITY,
        }
    }

    /// Collapses values above `2^max_bits` to Overflow.
    pub fn capped(self, budget: &Budget) -> ExtNat {
        match self {
            ExtNat::Fin(v) if budget.exceeds(&v) => ExtNat::Overflow,
            other => other,
        }
    }

    pub fn add(&self, o: &ExtNat) -> ExtNat {
        match (self, o) {
            (ExtNat::Fin(a), ExtNat::Fin(b)) => ExtNat::Fin(a + b),
            _ => ExtNat::Overflow,
        }
    }

    pub fn mul(&self, o: &ExtNat) -> ExtNat {
        match (self, o) {
            (ExtNat::Fin(a), _) | (_, ExtNat::Fin(a)) if a.is_zero() => ExtNat::zero(),
            (ExtNat::Fin(a), ExtNat::Fin(b)) => ExtNat::Fin(a * b),
            _ => ExtNat::Overflow,
        }
    }

    pub fn succ(&self) -> ExtNat {
        self.add(&ExtNat::one())
    }

    /// Truncated subtraction.
    pub fn monus(&self, o: &BigUint) -> ExtNat {
        match self {
            ExtNat::Fin(a) if a >= o => ExtNat::Fin(a - o),
            ExtNat::Fin(_) => ExtNat::zero(),
            ExtNat::Overflow => ExtNat::Overflow,
        }
    }

    pub fn max_of(&self, o: &ExtNat) -> ExtNat {
        if self >= o {
            self.clone()
        } else {
            o.clone()
        }
    }
}

impl PartialOrd for ExtNat {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ExtNat {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (ExtNat::Fin(a), ExtNat::Fin(b)) => a.cmp(b),
            (ExtNat::Fin(_), ExtNat::Overflow) => Ordering::Less,
            (ExtNat::Overflow, ExtNat::Fin(_)) => Ordering::Greater,
            (ExtNat::Overflow, ExtNat::Overflow) => Ordering::Equal,
        }
    }
}

impl fmt::Display for ExtNat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtNat::Fin(v) => write!(f, "{v}"),
            ExtNat::Overflow => write!(f, "overflow"),
        }
    }
}

impl From<u64> for ExtNat {
    fn from(v: u64) -> ExtNat {
        ExtNat::from_u64(v)
    }
}

impl From<BigUint> for ExtNat {
    fn from(v: BigUint) -> ExtNat {
        ExtNat::Fin(v)
    }
}

impl std::str::FromStr for ExtNat {
    type Err = String;
    fn from_str(s: &str) -> Result<ExtNat, String> {
        if s == "overflow" {
            return Ok(ExtNat::Overflow);
        }
        s.parse::<BigUint>()
            .map(ExtNat::Fin)
            .map_err(|e| format!("bad natural {s:?}: {e}"))
    }
}

// JSON form: a decimal string or "overflow". Strings keep big values exact.
impl Serialize for ExtNat {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for ExtNat {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Resource limits for certificate evaluation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Budget {
    /// Values above `2^max_bits` become Overflow.
    pub max_bits: u64,
    /// Cap on elementary loop steps (iterations, enumerations) per evaluation.
    pub max_steps: u64,
    /// Highest working precision tried when a ceiling is not yet determined.
    pub max_precision_bits: u32,
    /// Largest range enumerated when no monotonicity shortcut applies.
    pub enum_cap: u64,
}

impl Default for Budget {
    fn default() -> Self {
        Budget { max_bits: 256, max_steps: 1_000_000, max_precision_bits: 4096, enum_cap: 1 << 20 }
    }
}

impl Budget {
    pub fn with_bits(max_bits: u64) -> Budget {
        Budget { max_bits, ..Budget::default() }
    }

    /// Default budget, with `FEJER_BUDGET_BITS` overriding `max_bits`.
    pub fn from_env() -> Budget {
        let mut b = Budget::default();
        if let Some(bits) = std::env::var("FEJER_BUDGET_BITS").ok().and_then(|s| s.parse().ok()) {
            b.max_bits = bits;
        }
        b
    }

    pub fn limit(&self) -> BigUint {
        BigUint::one() << self.max_bits
    }

    pub fn exceeds(&self, v: &BigUint) -> bool {
        v.bits() > self.max_bits && *v > self.limit()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overflow_is_greatest() {
        assert!(ExtNat::Overflow > ExtNat::from_u64(u64::MAX));
        assert_eq!(ExtNat::from_u64(3).max_of(&ExtNat::Overflow), ExtNat::Overflow);
        assert_eq!(ExtNat::from_u64(3).add(&ExtNat::Overflow), ExtNat::Overflow);
        assert_eq!(ExtNat::zero().mul(&ExtNat::Overflow), ExtNat::zero());
    }

    #[test]
    fn budget_boundary() {
        let b = Budget::with_bits(8);
        assert_eq!(ExtNat::from_u64(256).capped(&b), ExtNat::from_u64(256));
        assert_eq!(ExtNat::from_u64(257).capped(&b), ExtNat::Overflow);
    }

    #[test]
    fn json_roundtrip() {
        let v = ExtNat::Fin(BigUint::one() << 200u32);
        let s = serde_json::to_string(&v).unwrap();
        assert_eq!(serde_json::from_str::<ExtNat>(&s).unwrap(), v);
        assert_eq!(serde_json::to_string(&ExtNat::Overflow).unwrap(), "\"overflow\"");
        assert_eq!(ExtNat::from_u64(5).monus(&BigUint::from(7u32)), ExtNat::zero());
    }
}
