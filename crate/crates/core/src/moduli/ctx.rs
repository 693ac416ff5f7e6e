//! Evaluation context: precision, budget, step counter and trace.

use num_bigint::BigUint;
use num_traits::Signed;
use serde::{Deserialize, Serialize};

use super::extnat::{Budget, ExtNat};
use super::interval::{Bound, Interval, Prec};
use super::rational as q;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rounding {
    /// Every ceiling was determined; the value is the formula's exact value.
    Exact,
    /// Some ceiling stayed ambiguous at the highest precision; the reported
    /// value is rounded up, so it is still a valid upper bound.
    Outward,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub key: String,
    pub value: String,
}

pub struct Ctx {
    pub budget: Budget,
    prec: Prec,
    undetermined: bool,
    steps: u64,
    trace: Vec<TraceEntry>,
}

impl Ctx {
    pub fn new(budget: Budget, bits: u32) -> Ctx {
        let prec = Prec::new(bits, &budget);
        Ctx { budget, prec, undetermined: false, steps: 0, trace: Vec::new() }
    }

    pub fn p(&self) -> Prec {
        self.prec
    }

    pub fn undetermined(&self) -> bool {
        self.undetermined
    }

    /// Charges `n` steps against the budget.
    pub fn tick(&mut self, n: u64) -> Result<()> {
        self.steps = self.steps.saturating_add(n);
        if self.steps > self.budget.max_steps {
            return Err(Error::Budget(format!("more than {} steps", self.budget.max_steps)));
        }
        Ok(())
    }

    pub fn cap(&self, v: BigUint) -> ExtNat {
        ExtNat::Fin(v).capped(&self.budget)
    }

    pub fn real(&self, v: &ExtNat) -> Interval {
        Interval::from_extnat(v, &self.budget)
    }

    pub fn note(&mut self, key: impl Into<String>, value: impl ToString) {
        self.trace.push(TraceEntry { key: key.into(), value: value.to_string() });
    }

    pub fn take_trace(&mut self) -> Vec<TraceEntry> {
        std::mem::take(&mut self.trace)
    }

    /// Ceiling of the enclosed value, clamped below at 0.
    ///
    /// When the enclosure straddles an integer the upper candidate is returned
    /// and the context is flagged, so the caller can retry at higher precision.
    pub fn ceil(&mut self, x: &Interval) -> Result<ExtNat> {
        if let Some(s) = x.square_hint() {
            return Ok(self.cap(q::ceil_sqrt(&s)));
        }
        let limit = self.budget.limit();
        let lo = q::ceil(x.lo());
        let lo = if lo.is_negative() { BigUint::default() } else { lo.magnitude().clone() };
        if lo > limit {
            return Ok(ExtNat::Overflow);
        }
        let hi = match x.hi() {
            Bound::Fin(h) => {
                let c = q::ceil(h);
                if c.is_negative() {
                    BigUint::default()
                } else {
                    c.magnitude().clone()
                }
            }
            Bound::Inf => {
                self.undetermined = true;
                return Ok(ExtNat::Overflow);
            }
        };
        if lo != hi {
            self.undetermined = true;
        }
        Ok(self.cap(hi))
    }
}

/// Result of a precision-adaptive evaluation.
#[derive(Debug, Clone)]
pub struct Evaluated<T> {
    pub value: T,
    pub rounding: Rounding,
    pub precision_bits: u32,
    pub trace: Vec<TraceEntry>,
}

/// Runs `f` at 64 bits, doubling the working precision while some ceiling is
/// undetermined, up to the budget's maximum.
pub fn evaluate<T>(budget: &Budget, f: impl Fn(&mut Ctx) -> Result<T>) -> Result<Evaluated<T>> {
    let mut bits = 64u32;
    loop {
        let mut ctx = Ctx::new(budget.clone(), bits);
        let value = f(&mut ctx)?;
        let done = !ctx.undetermined() || bits >= budget.max_precision_bits;
        if done {
            let rounding = if ctx.undetermined() { Rounding::Outward } else { Rounding::Exact };
            return Ok(Evaluated { value, rounding, precision_bits: bits, trace: ctx.take_trace() });
        }
        bits = (bits * 2).min(budget.max_precision_bits);
    }
}
