use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, PartialOrd, Ord)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Holds,
    HoldsWithinTolerance,
    /// The trajectory is too short to decide the claim.
    InconclusiveHorizon,
    /// The certificate exceeded the arithmetic budget.
    InconclusiveOverflow,
    Violated,
}

impl Status {
    pub fn as_str(&self) -> &'static str {
        match self {
            Status::Holds => "holds",
            Status::HoldsWithinTolerance => "holds_within_tolerance",
            Status::InconclusiveHorizon => "inconclusive_horizon",
            Status::InconclusiveOverflow => "inconclusive_overflow",
            Status::Violated => "violated",
        }
    }

    pub fn is_violation(&self) -> bool {
        *self == Status::Violated
    }

    pub fn holds(&self) -> bool {
        matches!(self, Status::Holds | Status::HoldsWithinTolerance)
    }

    /// Classifies lhs <= rhs: violated only when the excess is above `tol`.
    pub fn judge(lhs: f64, rhs: f64, tol: f64) -> Status {
        let excess = lhs - rhs;
        if excess.is_nan() {
            Status::Violated
        } else if excess <= 0.0 {
            Status::Holds
        } else if excess <= tol {
            Status::HoldsWithinTolerance
        } else {
            Status::Violated
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub claim: String,
    pub status: Status,
    /// Largest observed lhs - rhs; negative means slack.
    pub margin: Option<f64>,
    pub tolerance: f64,
    pub checked: u64,
    /// False when a sup over a continuum was only sampled.
    pub certified: bool,
    pub witness: BTreeMap<String, Value>,
    pub notes: Vec<String>,
}

impl VerificationReport {
    pub fn new(claim: impl Into<String>) -> VerificationReport {
        VerificationReport {
            claim: claim.into(),
            status: Status::Holds,
            margin: None,
            tolerance: 0.0,
            checked: 0,
            certified: true,
            witness: BTreeMap::new(),
            notes: Vec::new(),
        }
    }

    /// Records one inequality lhs <= rhs with its tolerance.
    pub fn record(&mut self, lhs: f64, rhs: f64, tol: f64) -> Status {
        let s = Status::judge(lhs, rhs, tol);
        let excess = lhs - rhs;
        self.checked += 1;
        if self.margin.map_or(true, |m| excess > m || excess.is_nan()) {
            self.margin = Some(excess);
            self.tolerance = tol;
        }
        self.status = self.status.max(s);
        s
    }

    pub fn escalate(&mut self, s: Status) {
        self.status = self.status.max(s);
    }

    pub fn with(mut self, key: &str, v: impl Serialize) -> VerificationReport {
        self.put(key, v);
        self
    }

    pub fn put(&mut self, key: &str, v: impl Serialize) {
        self.witness.insert(key.into(), serde_json::to_value(v).unwrap_or(Value::Null));
    }

    pub fn note(&mut self, s: impl Into<String>) {
        self.notes.push(s.into());
    }

    pub fn sampled(mut self) -> VerificationReport {
        self.certified = false;
        if !self.notes.iter().any(|n| n == SAMPLED) {
            self.notes.push(SAMPLED.into());
        }
        self
    }

    /// Merges `o` into this report as a sub-check.
    pub fn absorb(&mut self, o: &VerificationReport) {
        self.checked += o.checked;
        self.status = self.status.max(o.status);
        self.certified &= o.certified;
        if let Some(m) = o.margin {
            if self.margin.map_or(true, |s| m > s) {
                self.margin = Some(m);
                self.tolerance = o.tolerance;
            }
        }
        self.witness.insert(o.claim.clone(), serde_json::json!({ "status": o.status, "margin": o.margin, "witness": o.witness }));
    }
}

pub const SAMPLED: &str = "sampled, not certified";

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn judge_bands() {
        assert_eq!(Status::judge(1.0, 1.0, 0.1), Status::Holds);
        assert_eq!(Status::judge(1.05, 1.0, 0.1), Status::HoldsWithinTolerance);
        assert_eq!(Status::judge(1.2, 1.0, 0.1), Status::Violated);
        assert_eq!(Status::judge(f64::NAN, 1.0, 0.1), Status::Violated);
        let mut r = VerificationReport::new("x");
        r.record(0.0, 1.0, 0.0);
        r.record(1.05, 1.0, 0.1);
        assert_eq!(r.status, Status::HoldsWithinTolerance);
        assert!((r.margin.unwrap() - 0.05).abs() < 1e-12);
        assert_eq!(serde_json::to_string(&Status::InconclusiveOverflow).unwrap(), "\"inconclusive_overflow\"");
    }
}
