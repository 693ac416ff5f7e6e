use serde::{Deserialize, Serialize};

use super::ctx::{evaluate, Ctx, Rounding, TraceEntry};
use super::extnat::{Budget, ExtNat};
use crate::error::{Error, Result};

/// A computed bound together with the inputs and intermediate values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub theorem: String,
    pub inputs: serde_json::Value,
    pub value: ExtNat,
    pub rounding: Rounding,
    pub precision_bits: u32,
    pub trace: Vec<TraceEntry>,
}

impl Certificate {
    pub fn trace_value(&self, key: &str) -> Option<&str> {
        self.trace.iter().find(|e| e.key == key).map(|e| e.value.as_str())
    }
}

/// Evaluates `f` with adaptive precision. Budget exhaustion becomes an
/// Overflow value rather than an error.
pub fn certify(
    theorem: &str,
    inputs: serde_json::Value,
    budget: &Budget,
    f: impl Fn(&mut Ctx) -> Result<ExtNat>,
) -> Result<Certificate> {
    match evaluate(budget, f) {
        Ok(ev) => Ok(Certificate {
            theorem: theorem.to_string(),
            inputs,
            value: ev.value,
            rounding: ev.rounding,
            precision_bits: ev.precision_bits,
            trace: ev.trace,
        }),
        Err(Error::Budget(msg)) => Ok(Certificate {
            theorem: theorem.to_string(),
            inputs,
            value: ExtNat::Overflow,
            rounding: Rounding::Exact,
            precision_bits: 64,
            trace: vec![TraceEntry { key: "budget".into(), value: msg }],
        }),
        Err(e) => Err(e),
    }
}
